#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rhizohom/errors.hpp"
#include "rhizohom/kernels.hpp"

namespace rhizohom {

enum class Scheme { rothe, fully_implicit };
enum class NonlinearMethod { l_scheme, newton };

struct SolverSettings {
  double tau = 60.0;                              // s
  Scheme scheme = Scheme::rothe;
  NonlinearMethod nonlinear = NonlinearMethod::l_scheme;
  double L_stab = 0.0;        // <= 0: auto from a curve scan
  double tol_nl = 1e-12;      // ledger-relative nonlinear target
  int max_nl = 400;
  double tol_lin = 1e-12;     // relative linear residual
  int max_lin = 0;            // 0: auto
  bool adaptive_tau = false;
  double tau_max = 0.0;       // 0: 16x initial tau
  int max_halvings = 10;
  bool strict = false;        // residual-monotonicity violations become errors
};

struct StepStats {
  double tau = 0;
  int nonlinear_iterations = 0;
  int linear_iterations = 0;
  double residual_initial = 0;
  double residual_final = 0;    // tau * ||F||_1, the mass-ledger bound
  bool residual_monotone = true;
  double capacity_sup = 0;      // max theta'(h_new) over active cells
};

// Discrete conservation statement for one phase and one step, in physical
// water volume (m^3). residual() is the quantity the acceptance criteria
// bound by 1e-10 relative.
struct MassLedger {
  double storage_prev = 0;
  double storage_new = 0;
  double boundary_in = 0;   // tau * net inflow through domain boundaries
  double exchange_in = 0;   // tau * net inflow through interface exchange
  double residual() const { return storage_new - storage_prev - boundary_in - exchange_in; }
  double scale() const;
  double rel_residual() const { return std::abs(residual()) / scale(); }

  MassLedger& operator+=(const MassLedger& o);
};

// One phase (soil or root) of the coupled system on a structured box grid.
// Inactive cells carry zero conductivity and zero storage and are pinned to
// zero. The vertical axis is k; k = 0 is the bottom (x3 = -L3).
struct StructuredProblem {
  kernels::Box3 box;
  double dx = 1, dy = 1, dz = 1;
  std::vector<std::uint8_t> active;          // empty means all cells active
  std::optional<double> bottom_dirichlet;    // head on the bottom face
  bool vertical_only = false;                // root operator couples only in x3

  // Storage curves per cell (resolve the medium internally).
  std::function<double(std::size_t, double)> theta;
  std::function<double(std::size_t, double)> capacity;

  std::size_t n() const { return box.size(); }
  double cell_volume() const { return dx * dy * dz; }
  bool is_active(std::size_t c) const { return active.empty() || active[c]; }
};

// Per-step coefficient state, evaluated by the owner at the lagged head
// (Rothe) or the current outer iterate (fully implicit).
struct PhaseCoefficients {
  std::vector<double> Kx, Ky, Kz;  // per-cell directional conductivities (m/s)
  std::vector<double> K_bottom;    // per-column face conductivity at the Dirichlet face
  std::vector<double> top_flux;    // per-column outward normal flux (m/s)
  std::vector<double> exch_coef;   // per-cell exchange coefficient (m^2/s... volume-scaled)
  std::vector<double> exch_rhs;    // per-cell exchange source (coef * lagged partner head)
};

struct PhaseStepResult {
  StepStats stats;
  double boundary_in = 0;   // tau * net boundary inflow, phase-volume units
  double exchange_in = 0;   // tau * net exchange inflow, phase-volume units
};

// Solves V/tau (theta(h) - theta0) + A h = b implicitly in h, where A is the
// lagged-conductivity finite-volume operator defined by `coef` plus the
// exchange diagonal. The nonlinear storage term is handled by the L-scheme
// (constant stabilizer L >= sup theta') or Newton on the diagonal. Converges
// when tau * ||F||_1 <= ledger_target.
PhaseStepResult phase_step(const StructuredProblem& prob, const PhaseCoefficients& coef,
                           const std::vector<double>& theta0, const SolverSettings& s,
                           double tau, double ledger_target, std::vector<double>& h);

// phase_step first with the range-based stabilizer, falling back to the
// global one when the attempt fails or the post-hoc capacity check is
// violated (the step left the scanned head range).
PhaseStepResult phase_step_stabilized(const StructuredProblem& prob,
                                      const PhaseCoefficients& coef,
                                      const std::vector<double>& theta0,
                                      const SolverSettings& s, double L_range,
                                      double L_global, double tau, double ledger_target,
                                      std::vector<double>& h);

// Direct tridiagonal solve per vertical column of a box grid:
// diag*x_k - tz_{k-1}*x_{k-1} - tz_k*x_{k+1} = rhs. Columns are independent
// and run in parallel.
void thomas_vertical(const kernels::Box3& box, const std::vector<double>& diag,
                     const std::vector<double>& tz, const std::vector<double>& rhs,
                     std::vector<double>& x);

// Scans a capacity curve over [h_lo, h_hi] for the auto L-scheme stabilizer.
double capacity_sup_scan(const std::function<double(double)>& capacity, double h_lo,
                         double h_hi, int samples = 4096);

// Stabilizer for the heads actually present in a state (plus a margin): the
// L-scheme contraction rate degrades as L grows past sup theta', so the
// per-step L tracks the visited range. `probes` adds exact branch abscissae.
double range_stabilizer(const std::function<double(double)>& capacity,
                        const std::vector<double>& h, const std::vector<std::uint8_t>& active,
                        const std::vector<double>& probes, double margin = 0.5);

// Shared advance loop for the macro and micro runs: steps until t0 + duration,
// stopping exactly on each snapshot time. On SolverError the step is rolled
// back and tau halved (up to max_halvings, adaptive mode only); after three
// consecutive fast steps tau doubles up to tau_max. try_step(tau) advances the
// owner's state and returns the nonlinear iteration count.
void advance_time(double t0, double duration, const std::vector<double>& snapshot_times,
                  const SolverSettings& settings,
                  const std::function<double()>& current_time,
                  const std::function<int(double)>& try_step,
                  const std::function<void()>& save_state,
                  const std::function<void()>& restore_state,
                  const std::function<void()>& emit_snapshot);

}  // namespace rhizohom
