#include "rhizohom/macro.hpp"

#include <algorithm>
#include <cmath>

namespace rhizohom {

void MacroWeights::validate() const {
  if (!(theta_P >= 0 && theta_R >= 0 && theta_B >= 0))
    throw ConfigError("macro weights: fractions must be non-negative");
  if (std::abs(theta_P + theta_R + theta_B - 1.0) > 1e-9)
    throw ConfigError("macro weights: fractions must sum to 1");
  if (theta_P > 0 && std::abs(gamma_P * theta_P - gamma) > 1e-9 * std::max(1.0, gamma))
    throw ConfigError("macro weights: need gamma = gamma_P * theta_P");
}

MacroWeights weights_analytic(const UnitCellGeometry& geom) {
  MacroWeights w;
  w.theta_P = geom.frac_P_analytic();
  w.theta_R = geom.frac_R_analytic();
  w.theta_B = 1.0 - w.theta_P - w.theta_R;
  w.gamma = geom.perimeter_analytic();
  w.gamma_P = w.theta_P > 0 ? w.gamma / w.theta_P : 0.0;
  return w;
}

MacroWeights weights_counted(const EffectiveTable& table) {
  MacroWeights w;
  w.theta_P = table.frac_P;
  w.theta_R = table.frac_R;
  w.theta_B = table.frac_B;
  w.gamma = table.perimeter;
  w.gamma_P = w.theta_P > 0 ? w.gamma / w.theta_P : 0.0;
  return w;
}

double InitialCondition::value_S(double x3, double L3) const {
  return kind == Kind::uniform ? uniform_S : -(x3 + L3) + offset_S;
}

double InitialCondition::value_P(double x3, double L3) const {
  return kind == Kind::uniform ? uniform_P : -(x3 + L3) + offset_P;
}

void MacroConfig::validate() const {
  if (!(L1 > 0 && L2 > 0 && L3 > 0)) throw ConfigError("macro: domain extents must be positive");
  if (!(n3 >= 2)) throw ConfigError("macro: need n3 >= 2");
  if (!(n1 >= 1 && n2 >= 1)) throw ConfigError("macro: need n1, n2 >= 1");
  if (column_mode && (n1 != 1 || n2 != 1))
    throw ConfigError("macro: column mode requires n1 = n2 = 1");
  if (a > 0) throw ConfigError("macro: root bottom head a must be <= 0");
  w.validate();
}

MacroSolver::MacroSolver(const MacroConfig& cfg, const MediumSet& media,
                         const EffectiveTable* table)
    : cfg_(cfg), media_(media), table_(table) {
  cfg_.validate();
  media_.validate();
  box_ = {cfg.n1, cfg.n2, cfg.n3};
  dx_ = cfg.L1 / cfg.n1;
  dy_ = cfg.L2 / cfg.n2;
  dz_ = cfg.L3 / cfg.n3;
  if (cfg.n1 > 1 || cfg.n2 > 1) {
    if (table_ == nullptr)
      throw ConfigError("macro: a cell table is required for horizontal fluxes");
    for (const auto& a : table_->ahat)
      if (std::abs(a.a12) > 1e-8)
        throw ConfigError(
            "macro: off-diagonal effective entries are not supported by the "
            "two-point flux scheme");
  }

  soil_.box = box_;
  soil_.dx = dx_;
  soil_.dy = dy_;
  soil_.dz = dz_;
  soil_.bottom_dirichlet = 0.0;
  soil_.theta = [this](std::size_t, double h) { return theta_star(h); };
  soil_.capacity = [this](std::size_t, double h) { return capacity_star(h); };

  root_ = soil_;
  root_.vertical_only = true;
  root_.bottom_dirichlet = cfg.a;
  root_.theta = [this](std::size_t, double h) { return media_.root.theta(h); };
  root_.capacity = [this](std::size_t, double h) { return media_.root.capacity(h); };

  auto cap_s = [this](double h) { return capacity_star(h); };
  auto cap_p = [this](double h) { return media_.root.capacity(h); };
  L_soil_ = 1.05 * capacity_sup_scan(cap_s, -1e3, 10.0);
  double lp = capacity_sup_scan(cap_p, -1e3, 10.0);
  lp = std::max(lp, media_.root.capacity(media_.root.h_ae));
  lp = std::max(lp, media_.root.capacity(std::nextafter(media_.root.h_ae, -1e9)));
  L_root_ = 1.05 * lp;
}

double MacroSolver::theta_star(double h) const {
  return cfg_.w.theta_R * media_.soil_R.theta(h) + cfg_.w.theta_B * media_.soil_B.theta(h);
}

double MacroSolver::capacity_star(double h) const {
  return cfg_.w.theta_R * media_.soil_R.capacity(h) +
         cfg_.w.theta_B * media_.soil_B.capacity(h);
}

double MacroSolver::k33(double h) const {
  return cfg_.w.theta_R * media_.soil_R.conductivity(h) +
         cfg_.w.theta_B * media_.soil_B.conductivity(h);
}

MacroState MacroSolver::initial_state() const {
  MacroState st;
  st.h_S.resize(box_.size());
  st.h_P.resize(box_.size());
  for (int k = 0; k < box_.n3; ++k) {
    const double x3 = -cfg_.L3 + (k + 0.5) * dz_;
    for (int j = 0; j < box_.n2; ++j)
      for (int i = 0; i < box_.n1; ++i) {
        st.h_S[box_.idx(i, j, k)] = cfg_.init.value_S(x3, cfg_.L3);
        st.h_P[box_.idx(i, j, k)] = cfg_.init.value_P(x3, cfg_.L3);
      }
  }
  return st;
}

void MacroSolver::assemble_soil(const std::vector<double>& h_lag,
                                const std::vector<double>& h_partner,
                                PhaseCoefficients& c) const {
  const std::size_t n = box_.size();
  const bool horizontal = box_.n1 > 1 || box_.n2 > 1;
  c.Kx.assign(n, 0.0);
  c.Ky.assign(n, 0.0);
  c.Kz.resize(n);
  const double V = cell_volume();
  const double exch = V * media_.root.k_gamma() * cfg_.w.gamma;
  c.exch_coef.assign(n, exch);
  c.exch_rhs.resize(n);
  std::vector<double> KR(n), KB(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)n; ++i) {
    const double h = h_lag[i];
    KR[i] = media_.soil_R.conductivity(h);
    KB[i] = media_.soil_B.conductivity(h);
    c.Kz[i] = cfg_.w.theta_R * KR[i] + cfg_.w.theta_B * KB[i];
    c.exch_rhs[i] = exch * h_partner[i];
  }
  if (horizontal) {
    // validate the contrast range outside the parallel loops so range errors
    // can propagate
    double rho_min = 1e300, rho_max = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double rho = KR[i] / KB[i];
      if (!std::isfinite(rho)) throw DomainError("macro: non-finite conductivity contrast");
      rho_min = std::min(rho_min, rho);
      rho_max = std::max(rho_max, rho);
    }
    (void)table_->interpolate(rho_min);
    (void)table_->interpolate(rho_max);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i) {
      const SymTensor2 a = table_->interpolate(KR[i] / KB[i]);
      c.Kx[i] = KB[i] * a.a11;
      c.Ky[i] = KB[i] * a.a22;
    }
  }
  const std::size_t ncol = std::size_t(box_.n1) * box_.n2;
  c.K_bottom.resize(ncol);
  c.top_flux.resize(ncol);
  const double k_dirichlet = k33(*soil_.bottom_dirichlet);
  const std::size_t top0 = std::size_t(box_.n3 - 1) * ncol;
  for (std::size_t col = 0; col < ncol; ++col) {
    const double kc = k33(h_lag[col]);
    c.K_bottom[col] = (kc > 0 && k_dirichlet > 0) ? 2 * kc * k_dirichlet / (kc + k_dirichlet) : 0;
    c.top_flux[col] = cfg_.w.theta_S() * media_.surface.flux(h_lag[top0 + col]);
  }
}

void MacroSolver::assemble_root(const std::vector<double>& h_lag,
                                const std::vector<double>& h_partner,
                                PhaseCoefficients& c) const {
  const std::size_t n = box_.size();
  c.Kx.assign(n, 0.0);
  c.Ky.assign(n, 0.0);
  c.Kz.resize(n);
  const double V = cell_volume();
  const double exch = V * media_.root.k_gamma() * cfg_.w.gamma_P;
  c.exch_coef.assign(n, exch);
  c.exch_rhs.resize(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)n; ++i) {
    c.Kz[i] = root_tensor_macro(media_.root, h_lag[i], cfg_.L3);
    c.exch_rhs[i] = exch * h_partner[i];
  }
  const std::size_t ncol = std::size_t(box_.n1) * box_.n2;
  c.K_bottom.resize(ncol);
  c.top_flux.assign(ncol, media_.surface.T_pot());
  const double kd = root_tensor_macro(media_.root, cfg_.a, cfg_.L3);
  for (std::size_t col = 0; col < ncol; ++col) {
    const double kc = root_tensor_macro(media_.root, h_lag[col], cfg_.L3);
    c.K_bottom[col] = (kc > 0 && kd > 0) ? 2 * kc * kd / (kc + kd) : 0;
  }
}

namespace {

double storage_sum(const StructuredProblem& prob, const std::vector<double>& h, double V) {
  std::vector<double> vals(h.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)h.size(); ++c)
    if (prob.is_active(c)) vals[c] = V * prob.theta(c, h[c]);
  return kernels::sum(vals);
}

}  // namespace

MacroStepReport MacroSolver::finalize_report(const MacroState& prev, const MacroState& next,
                                             PhaseStepResult& rs, PhaseStepResult& rp) const {
  MacroStepReport rep;
  rep.soil = rs.stats;
  rep.root = rp.stats;
  const double V = cell_volume();
  const double thP = cfg_.w.theta_P;

  rep.ledger_soil.storage_prev = storage_sum(soil_, prev.h_S, V);
  rep.ledger_soil.storage_new = storage_sum(soil_, next.h_S, V);
  rep.ledger_soil.boundary_in = rs.boundary_in;
  rep.ledger_soil.exchange_in = rs.exchange_in;

  rep.ledger_root.storage_prev = thP * storage_sum(root_, prev.h_P, V);
  rep.ledger_root.storage_new = thP * storage_sum(root_, next.h_P, V);
  rep.ledger_root.boundary_in = thP * rp.boundary_in;
  rep.ledger_root.exchange_in = thP * rp.exchange_in;

  rep.ledger_total = rep.ledger_soil;
  rep.ledger_total += rep.ledger_root;

  // weight-normalized cancellation of the exchange ledgers at the new state
  const std::size_t n = box_.size();
  std::vector<double> es(n), ep(n);
  const double cs = V * media_.root.k_gamma() * cfg_.w.gamma;
  const double cp = V * media_.root.k_gamma() * cfg_.w.gamma_P;
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c) {
    es[c] = cs * (next.h_S[c] - next.h_P[c]);
    ep[c] = cp * (next.h_P[c] - next.h_S[c]);
  }
  const double sum_s = kernels::sum(es);
  const double sum_p = thP * kernels::sum(ep);
  const double scale = std::max({std::abs(sum_s), std::abs(sum_p), 1e-300});
  rep.exchange_antisym_rel = std::abs(sum_s + sum_p) / scale;
  return rep;
}

MacroStepReport MacroSolver::step_rothe(MacroState& state, const SolverSettings& s,
                                        double tau) {
  const std::size_t n = box_.size();
  const MacroState prev = state;

  std::vector<double> theta0_s(n), theta0_p(n);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c) {
    theta0_s[c] = theta_star(prev.h_S[c]);
    theta0_p[c] = media_.root.theta(prev.h_P[c]);
  }

  PhaseCoefficients cs, cp;
  assemble_soil(prev.h_S, prev.h_P, cs);
  assemble_root(prev.h_P, prev.h_S, cp);

  const double V = cell_volume();
  const double target_s = 10.0 * s.tol_nl * storage_sum(soil_, prev.h_S, V);
  const double target_p =
      10.0 * s.tol_nl * std::max(storage_sum(root_, prev.h_P, V), 1e-30);
  const double Ls = range_stabilizer([this](double h) { return capacity_star(h); },
                                     prev.h_S, soil_.active, {});
  const double Lp = range_stabilizer([this](double h) { return media_.root.capacity(h); },
                                     prev.h_P, root_.active, {media_.root.h_ae});

  // the two decoupled sub-steps read only previous-step data of each other
  PhaseStepResult rs =
      phase_step_stabilized(soil_, cs, theta0_s, s, Ls, L_soil_, tau, target_s, state.h_S);
  PhaseStepResult rp =
      phase_step_stabilized(root_, cp, theta0_p, s, Lp, L_root_, tau, target_p, state.h_P);

  state.t = prev.t + tau;
  return finalize_report(prev, state, rs, rp);
}

MacroStepReport MacroSolver::step_implicit(MacroState& state, const SolverSettings& s,
                                           double tau) {
  const std::size_t n = box_.size();
  const MacroState prev = state;

  std::vector<double> theta0_s(n), theta0_p(n);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c) {
    theta0_s[c] = theta_star(prev.h_S[c]);
    theta0_p[c] = media_.root.theta(prev.h_P[c]);
  }

  const double V = cell_volume();
  const double target_s = 10.0 * s.tol_nl * storage_sum(soil_, prev.h_S, V);
  const double target_p =
      10.0 * s.tol_nl * std::max(storage_sum(root_, prev.h_P, V), 1e-30);
  const double Ls = range_stabilizer([this](double h) { return capacity_star(h); },
                                     prev.h_S, soil_.active, {});
  const double Lp = range_stabilizer([this](double h) { return media_.root.capacity(h); },
                                     prev.h_P, root_.active, {media_.root.h_ae});

  MacroStepReport rep;
  const int max_outer = 60;
  for (int outer = 0;; ++outer) {
    if (outer == max_outer)
      throw SolverError("fully implicit step: outer coupling loop did not converge", 0.0);
    MacroState it_prev = state;
    PhaseCoefficients cs, cp;
    assemble_soil(state.h_S, state.h_P, cs);
    assemble_root(state.h_P, state.h_S, cp);
    PhaseStepResult rs =
        phase_step_stabilized(soil_, cs, theta0_s, s, Ls, L_soil_, tau, target_s, state.h_S);
    PhaseStepResult rp =
        phase_step_stabilized(root_, cp, theta0_p, s, Lp, L_root_, tau, target_p, state.h_P);
    double dmax = 0;
    for (std::size_t c = 0; c < n; ++c) {
      dmax = std::max(dmax, std::abs(state.h_S[c] - it_prev.h_S[c]));
      dmax = std::max(dmax, std::abs(state.h_P[c] - it_prev.h_P[c]));
    }
    if (dmax <= 1e-11 * std::max(1.0, kernels::max_abs(state.h_S))) {
      state.t = prev.t + tau;
      rep = finalize_report(prev, state, rs, rp);
      rep.soil.nonlinear_iterations += outer;  // count outer sweeps in the report
      break;
    }
  }
  return rep;
}

MacroStepReport MacroSolver::step(MacroState& state, const SolverSettings& settings,
                                  double tau) {
  return settings.scheme == Scheme::rothe ? step_rothe(state, settings, tau)
                                          : step_implicit(state, settings, tau);
}

double MacroSolver::contraction_metric(const MacroState& s1, const MacroState& s2) const {
  if (s1.h_S.size() != s2.h_S.size() || s1.h_P.size() != s2.h_P.size())
    throw AlignmentError("contraction metric: mismatched grids");
  const std::size_t n = box_.size();
  const double V = cell_volume();
  std::vector<double> vals(n);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c) {
    const double ds = theta_star(s1.h_S[c]) - theta_star(s2.h_S[c]);
    const double dp = media_.root.theta(s1.h_P[c]) - media_.root.theta(s2.h_P[c]);
    vals[c] = V * (std::max(ds, 0.0) + cfg_.w.theta_P * std::max(dp, 0.0));
  }
  return kernels::sum(vals);
}

double MacroSolver::energy_soil(const MacroState& s) const {
  const std::size_t n = box_.size();
  const double V = cell_volume();
  std::vector<double> vals(n);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c)
    vals[c] = V * (cfg_.w.theta_R * media_.retention_primitive(Medium::R, s.h_S[c]) +
                   cfg_.w.theta_B * media_.retention_primitive(Medium::B, s.h_S[c]));
  return kernels::sum(vals);
}

double MacroSolver::energy_root(const MacroState& s) const {
  const std::size_t n = box_.size();
  const double V = cell_volume();
  std::vector<double> vals(n);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c)
    vals[c] = V * cfg_.w.theta_P * media_.retention_primitive(Medium::P, s.h_P[c]);
  return kernels::sum(vals);
}

void run_macro(MacroSolver& solver, MacroState& state, double duration,
               const std::vector<double>& snapshot_times, const SolverSettings& settings,
               const RunCallbacks& cb) {
  MacroState backup;
  advance_time(
      state.t, duration, snapshot_times, settings, [&] { return state.t; },
      [&](double tau) {
        MacroStepReport rep = solver.step(state, settings, tau);
        if (cb.on_step) cb.on_step(state, rep);
        return rep.soil.nonlinear_iterations + rep.root.nonlinear_iterations;
      },
      [&] { backup = state; }, [&] { state = backup; },
      [&] {
        if (cb.on_snapshot) cb.on_snapshot(state);
      });
}

}  // namespace rhizohom
