#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rhizohom/cell.hpp"
#include "rhizohom/constitutive.hpp"
#include "rhizohom/macro.hpp"
#include "rhizohom/solvercore.hpp"

namespace rhizohom {

enum class MicroDims { d3, strip };

struct MicroBuildParams {
  MicroDims dims = MicroDims::d3;
  double eps = 0.25;
  double L1 = 1, L2 = 1, L3 = 1;
  int cells_per_eps = 20;  // fine cells per unit cell and horizontal direction
  int n3 = 16;
  double r_P = 0.2, r_R = 0.35;
};

// Explicit epsilon-periodic root geometry on a fine Cartesian grid. The label
// pattern is column-uniform (cylindrical microstructure): one horizontal map
// replicated over every layer. The strip variant tiles vertical P/R/B strips
// in the (x2, x3) plane.
struct MicroGeometry {
  MicroDims dims = MicroDims::d3;
  double eps = 0;
  double L1 = 1, L2 = 1, L3 = 1;
  int m1 = 1, m2 = 1;        // unit cells per horizontal direction
  int nc = 0;                // fine cells per unit cell
  kernels::Box3 box;         // full fine grid (N1, N2, n3)
  double dx = 1, dy = 1, dz = 1;
  std::vector<std::uint8_t> label2d;  // per horizontal cell: kLabelP/R/B

  struct InterfaceFace {
    int s2d;  // soil column index
    int p2d;  // root column index
  };
  std::vector<InterfaceFace> ifaces;  // per layer; replicated over k

  // cell-unit pattern measures (match classify_cell of the same pattern)
  double frac_P = 0, frac_R = 0, frac_B = 0;
  double perimeter = 0;  // staircase |Gamma_P| per unit cell

  std::size_t ncol() const { return std::size_t(box.n1) * box.n2; }
  MacroWeights weights() const;  // counted weights shared with the macro side
  std::uint64_t pattern_hash() const;
};

// Checks commensurability (L1/eps, L2/eps integral) and root resolution
// (>= 4 cells across r_P).
MicroGeometry build_micro(const MicroBuildParams& p);

struct MicroState {
  std::vector<double> h_S, h_P;  // full-box arrays; inactive cells pinned to 0
  double t = 0;
};

struct MicroStepReport {
  StepStats soil, root;
  MassLedger ledger_soil, ledger_root, ledger_total;
  double exchange_antisym_rel = 0;
};

class MicroSolver {
 public:
  MicroSolver(const MicroGeometry& geom, const MediumSet& media, double root_bottom_a,
              const InitialCondition& init);

  const MicroGeometry& geometry() const { return geom_; }
  MicroState initial_state() const;

  MicroStepReport step(MicroState& state, const SolverSettings& settings, double tau);

  // Volume averages over the soil / root cells inside each macro cell.
  // Throws AlignmentError unless the macro grid lines up with the
  // eps-tiling. `flagged` counts macro cells with an empty intersection
  // (filled from the nearest column).
  void average_to_macro(const MicroState& state, const kernels::Box3& macro_box,
                        std::vector<double>& hbar_S, std::vector<double>& hbar_P,
                        int* flagged = nullptr) const;

  double contraction_metric(const MicroState& s1, const MicroState& s2) const;
  double energy_soil(const MicroState& s) const;
  double energy_root(const MicroState& s) const;
  double max_head(const MicroState& s) const;

  // Assembled horizontal root face transmissibility at head h (the
  // eps-scaling check reads this).
  double root_horizontal_transmissibility(double h) const;

  const StructuredProblem& soil_problem() const { return soil_; }
  const StructuredProblem& root_problem() const { return root_; }

 private:
  MicroGeometry geom_;
  const MediumSet& media_;
  double a_;
  InitialCondition init_;
  StructuredProblem soil_, root_;
  double L_soil_, L_root_;

  Medium medium_of(std::size_t col) const;
  void assemble_soil(const std::vector<double>& h_lag, const std::vector<double>& h_partner,
                     PhaseCoefficients& c) const;
  void assemble_root(const std::vector<double>& h_lag, const std::vector<double>& h_partner,
                     PhaseCoefficients& c) const;
  MicroStepReport step_rothe(MicroState& state, const SolverSettings& s, double tau);
  MicroStepReport step_implicit(MicroState& state, const SolverSettings& s, double tau);
  MicroStepReport finalize_report(const MicroState& prev, const MicroState& next,
                                  PhaseStepResult& rs, PhaseStepResult& rp) const;
};

struct MicroRunCallbacks {
  std::function<void(const MicroState&, const MicroStepReport&)> on_step;
  std::function<void(const MicroState&)> on_snapshot;
};

void run_micro(MicroSolver& solver, MicroState& state, double duration,
               const std::vector<double>& snapshot_times, const SolverSettings& settings,
               const MicroRunCallbacks& cb);

}  // namespace rhizohom
