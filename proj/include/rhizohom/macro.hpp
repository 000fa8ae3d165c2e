#pragma once

#include <functional>
#include <vector>

#include "rhizohom/cell.hpp"
#include "rhizohom/constitutive.hpp"
#include "rhizohom/solvercore.hpp"

namespace rhizohom {

// Unit-cell volume and interface measures entering the macroscopic system.
struct MacroWeights {
  double theta_P = 0;   // |Y_P| / |Y|
  double theta_R = 0;   // |R^| / |Y|
  double theta_B = 0;   // |B^| / |Y|
  double gamma = 0;     // |Gamma_P| / |Y|
  double gamma_P = 0;   // |Gamma_P| / |Y_P|
  double theta_S() const { return theta_R + theta_B; }
  void validate() const;
};

// Smooth-geometry weights (disk perimeter 2 pi r_P).
MacroWeights weights_analytic(const UnitCellGeometry& geom);
// Rasterized weights from the classified cell; micro-vs-macro comparisons use
// these so both sides share the staircase bias.
MacroWeights weights_counted(const EffectiveTable& table);

struct InitialCondition {
  enum class Kind { hydrostatic, uniform };
  Kind kind = Kind::hydrostatic;
  double offset_S = 0, offset_P = 0;    // added to the hydrostatic profile
  double uniform_S = -1, uniform_P = -1;
  double value_S(double x3, double L3) const;
  double value_P(double x3, double L3) const;
};

struct MacroConfig {
  double L1 = 1, L2 = 1, L3 = 1;
  int n1 = 1, n2 = 1, n3 = 32;
  bool column_mode = true;  // collapse to one vertical column
  double a = 0.0;           // root-bottom Dirichlet head, <= 0
  MacroWeights w;
  InitialCondition init;
  void validate() const;
};

struct MacroState {
  std::vector<double> h_S, h_P;
  double t = 0;
};

struct MacroStepReport {
  StepStats soil, root;
  MassLedger ledger_soil, ledger_root, ledger_total;
  double exchange_antisym_rel = 0;  // weight-normalized ledger cancellation
};

class MacroSolver {
 public:
  // `table` may be null only when the grid has no horizontal extent.
  MacroSolver(const MacroConfig& cfg, const MediumSet& media, const EffectiveTable* table);

  MacroState initial_state() const;
  const kernels::Box3& box() const { return box_; }
  double dz() const { return dz_; }
  double cell_volume() const { return dx_ * dy_ * dz_; }
  const MacroConfig& config() const { return cfg_; }

  MacroStepReport step(MacroState& state, const SolverSettings& settings, double tau);

  // Sum_J int (theta_J(h_1) - theta_J(h_2))^+ dx with the root term weighted
  // by the root volume fraction (phase volumes).
  double contraction_metric(const MacroState& s1, const MacroState& s2) const;

  double energy_soil(const MacroState& s) const;  // int Theta_S^* dx
  double energy_root(const MacroState& s) const;  // theta_P-weighted int Theta_P dx

  double theta_star(double h) const;
  double capacity_star(double h) const;
  double k33(double h) const;

 private:
  MacroConfig cfg_;
  const MediumSet& media_;
  const EffectiveTable* table_;
  kernels::Box3 box_;
  double dx_, dy_, dz_;
  StructuredProblem soil_, root_;
  double L_soil_, L_root_;

  void assemble_soil(const std::vector<double>& h_lag, const std::vector<double>& h_partner,
                     PhaseCoefficients& c) const;
  void assemble_root(const std::vector<double>& h_lag, const std::vector<double>& h_partner,
                     PhaseCoefficients& c) const;
  MacroStepReport step_rothe(MacroState& state, const SolverSettings& s, double tau);
  MacroStepReport step_implicit(MacroState& state, const SolverSettings& s, double tau);
  MacroStepReport finalize_report(const MacroState& prev, const MacroState& next,
                                  PhaseStepResult& rs, PhaseStepResult& rp) const;
};

struct RunCallbacks {
  std::function<void(const MacroState&, const MacroStepReport&)> on_step;
  std::function<void(const MacroState&)> on_snapshot;
};

// Advances to `duration`, emitting snapshots at the sorted times in
// `snapshot_times` (which must lie on the tau grid unless adaptivity is on).
// Handles the halve-on-failure / double-on-streak tau policy.
void run_macro(MacroSolver& solver, MacroState& state, double duration,
               const std::vector<double>& snapshot_times, const SolverSettings& settings,
               const RunCallbacks& cb);

}  // namespace rhizohom
