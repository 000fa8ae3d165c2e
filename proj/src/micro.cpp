#include "rhizohom/micro.hpp"

#include <algorithm>
#include <cmath>

namespace rhizohom {

namespace {

int commensurate(double L, double eps, const char* axis) {
  const double q = L / eps;
  const int m = (int)std::lround(q);
  if (m < 1 || std::abs(q - m) > 1e-9 * std::max(1.0, q))
    throw GeometryError(std::string("micro: L/eps must be an integer along ") + axis);
  return m;
}

}  // namespace

MacroWeights MicroGeometry::weights() const {
  MacroWeights w;
  w.theta_P = frac_P;
  w.theta_R = frac_R;
  w.theta_B = frac_B;
  w.gamma = perimeter;
  w.gamma_P = frac_P > 0 ? perimeter / frac_P : 0.0;
  return w;
}

std::uint64_t MicroGeometry::pattern_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  for (auto v : label2d) mix(v);
  mix(std::uint64_t(m1));
  mix(std::uint64_t(m2));
  mix(std::uint64_t(nc));
  mix(std::uint64_t(box.n3));
  return h;
}

MicroGeometry build_micro(const MicroBuildParams& p) {
  if (!(p.eps > 0)) throw GeometryError("micro: eps must be positive");
  if (p.r_P > 0 && p.r_P * p.cells_per_eps < 4.0)
    throw GeometryError("micro: resolution must give >= 4 cells across the root radius");

  MicroGeometry g;
  g.dims = p.dims;
  g.eps = p.eps;
  g.L1 = p.L1;
  g.L2 = p.L2;
  g.L3 = p.L3;
  g.nc = p.cells_per_eps;

  UnitCellGeometry cellgeom;
  cellgeom.r_P = p.r_P;
  cellgeom.r_R = p.r_R;
  cellgeom.N = p.cells_per_eps;
  cellgeom.mode = p.dims == MicroDims::strip ? CellMode::laminate : CellMode::disk;
  CellClassification cls = classify_cell(cellgeom);
  g.frac_P = cls.frac_P;
  g.frac_R = cls.frac_R;
  g.frac_B = cls.frac_B;
  g.perimeter = cls.perimeter;

  const int nc = g.nc;
  if (p.dims == MicroDims::d3) {
    g.m1 = commensurate(p.L1, p.eps, "x1");
    g.m2 = commensurate(p.L2, p.eps, "x2");
    g.box = {g.m1 * nc, g.m2 * nc, p.n3};
    g.dx = p.eps / nc;
    g.dy = p.eps / nc;
    g.label2d.resize(g.ncol());
    for (int J = 0; J < g.m2; ++J)
      for (int j = 0; j < nc; ++j)
        for (int I = 0; I < g.m1; ++I)
          for (int i = 0; i < nc; ++i)
            g.label2d[std::size_t(J * nc + j) * g.box.n1 + (I * nc + i)] =
                cls.label[std::size_t(j) * nc + i];
  } else {
    g.m1 = 1;
    g.m2 = commensurate(p.L2, p.eps, "x2");
    g.box = {1, g.m2 * nc, p.n3};
    g.dx = 1.0;  // unit out-of-plane thickness
    g.dy = p.eps / nc;
    g.label2d.resize(g.ncol());
    for (int J = 0; J < g.m2; ++J)
      for (int j = 0; j < nc; ++j)
        g.label2d[std::size_t(J * nc + j)] = cls.label[std::size_t(j)];  // laminate row 0
  }
  g.dz = p.L3 / p.n3;

  // interface faces between P columns and adjacent soil columns
  const int N1 = g.box.n1, N2 = g.box.n2;
  for (int j = 0; j < N2; ++j)
    for (int i = 0; i < N1; ++i) {
      const int c = j * N1 + i;
      if (g.label2d[c] != kLabelP) continue;
      const int nbr[4] = {i + 1 < N1 ? c + 1 : -1, i > 0 ? c - 1 : -1,
                          j + 1 < N2 ? c + N1 : -1, j > 0 ? c - N1 : -1};
      for (int f = 0; f < 4; ++f)
        if (nbr[f] >= 0 && g.label2d[nbr[f]] != kLabelP)
          g.ifaces.push_back({nbr[f], c});
    }

  // every root column must extend the full depth by construction; check the
  // counted pattern sizes are consistent with the eps-tiling
  std::size_t nP = 0;
  for (auto v : g.label2d) nP += v == kLabelP;
  const double fP = double(nP) / double(g.ncol());
  if (std::abs(fP - g.frac_P) > 1e-12)
    throw GeometryError("micro: tiled pattern does not match the unit-cell fractions");
  return g;
}

Medium MicroSolver::medium_of(std::size_t col) const {
  switch (geom_.label2d[col]) {
    case kLabelR: return Medium::R;
    case kLabelB: return Medium::B;
    default: return Medium::P;
  }
}

MicroSolver::MicroSolver(const MicroGeometry& geom, const MediumSet& media,
                         double root_bottom_a, const InitialCondition& init)
    : geom_(geom), media_(media), a_(root_bottom_a), init_(init) {
  media_.validate();
  if (a_ > 0) throw ConfigError("micro: root bottom head a must be <= 0");

  const std::size_t n = geom_.box.size();
  const std::size_t ncol = geom_.ncol();

  soil_.box = geom_.box;
  soil_.dx = geom_.dx;
  soil_.dy = geom_.dy;
  soil_.dz = geom_.dz;
  soil_.bottom_dirichlet = 0.0;
  soil_.active.assign(n, 0);
  root_ = soil_;
  root_.bottom_dirichlet = a_;

  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t col = c % ncol;
    const bool is_root = geom_.label2d[col] == kLabelP;
    soil_.active[c] = !is_root;
    root_.active[c] = is_root;
  }

  soil_.theta = [this, ncol](std::size_t c, double h) {
    return media_.soil(medium_of(c % ncol)).theta(h);
  };
  soil_.capacity = [this, ncol](std::size_t c, double h) {
    return media_.soil(medium_of(c % ncol)).capacity(h);
  };
  root_.theta = [this](std::size_t, double h) { return media_.root.theta(h); };
  root_.capacity = [this](std::size_t, double h) { return media_.root.capacity(h); };

  auto cap_s = [this](double h) {
    return std::max(media_.soil_R.capacity(h), media_.soil_B.capacity(h));
  };
  L_soil_ = 1.05 * capacity_sup_scan(cap_s, -1e3, 10.0);
  auto cap_p = [this](double h) { return media_.root.capacity(h); };
  double lp = capacity_sup_scan(cap_p, -1e3, 10.0);
  lp = std::max(lp, media_.root.capacity(media_.root.h_ae));
  lp = std::max(lp, media_.root.capacity(std::nextafter(media_.root.h_ae, -1e9)));
  L_root_ = 1.05 * lp;
}

MicroState MicroSolver::initial_state() const {
  MicroState st;
  const std::size_t n = geom_.box.size();
  st.h_S.assign(n, 0.0);
  st.h_P.assign(n, 0.0);
  for (int k = 0; k < geom_.box.n3; ++k) {
    const double x3 = -geom_.L3 + (k + 0.5) * geom_.dz;
    for (int j = 0; j < geom_.box.n2; ++j)
      for (int i = 0; i < geom_.box.n1; ++i) {
        const std::size_t c = geom_.box.idx(i, j, k);
        if (soil_.active[c]) st.h_S[c] = init_.value_S(x3, geom_.L3);
        if (root_.active[c]) st.h_P[c] = init_.value_P(x3, geom_.L3);
      }
  }
  return st;
}

double MicroSolver::root_horizontal_transmissibility(double h) const {
  const RootTensorEntries t = root_tensor_micro(media_.root, h, geom_.eps, geom_.L3);
  return t.horizontal * (geom_.dy * geom_.dz) / geom_.dx;
}

void MicroSolver::assemble_soil(const std::vector<double>& h_lag,
                                const std::vector<double>& h_partner,
                                PhaseCoefficients& c) const {
  const std::size_t n = geom_.box.size();
  const std::size_t ncol = geom_.ncol();
  c.Kx.assign(n, 0.0);
  c.exch_coef.assign(n, 0.0);
  c.exch_rhs.assign(n, 0.0);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)n; ++i)
    if (soil_.active[i]) c.Kx[i] = media_.soil(medium_of(i % ncol)).conductivity(h_lag[i]);
  c.Ky = c.Kx;
  c.Kz = c.Kx;

  c.K_bottom.assign(ncol, 0.0);
  c.top_flux.assign(ncol, 0.0);
  const std::size_t top0 = std::size_t(geom_.box.n3 - 1) * ncol;
  for (std::size_t col = 0; col < ncol; ++col) {
    if (geom_.label2d[col] == kLabelP) continue;
    const auto& s = media_.soil(medium_of(col));
    const double kc = s.conductivity(h_lag[col]);
    const double kd = s.conductivity(0.0);
    c.K_bottom[col] = 2 * kc * kd / (kc + kd);
    c.top_flux[col] = media_.surface.flux(h_lag[top0 + col]);
  }

  // Robin exchange on the staircase interface, own side implicit
  const double cf = geom_.eps * media_.root.k_gamma() * geom_.dy * geom_.dz;
  const std::size_t stride = ncol;
  for (const auto& f : geom_.ifaces)
    for (int k = 0; k < geom_.box.n3; ++k) {
      const std::size_t cs = std::size_t(f.s2d) + std::size_t(k) * stride;
      const std::size_t cp = std::size_t(f.p2d) + std::size_t(k) * stride;
      c.exch_coef[cs] += cf;
      c.exch_rhs[cs] += cf * h_partner[cp];
    }
}

void MicroSolver::assemble_root(const std::vector<double>& h_lag,
                                const std::vector<double>& h_partner,
                                PhaseCoefficients& c) const {
  const std::size_t n = geom_.box.size();
  const std::size_t ncol = geom_.ncol();
  c.Kx.assign(n, 0.0);
  c.Ky.assign(n, 0.0);
  c.Kz.assign(n, 0.0);
  c.exch_coef.assign(n, 0.0);
  c.exch_rhs.assign(n, 0.0);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)n; ++i) {
    if (!root_.active[i]) continue;
    const RootTensorEntries t = root_tensor_micro(media_.root, h_lag[i], geom_.eps, geom_.L3);
    c.Kx[i] = t.horizontal;
    c.Ky[i] = t.horizontal;
    c.Kz[i] = t.vertical;
  }

  c.K_bottom.assign(ncol, 0.0);
  c.top_flux.assign(ncol, 0.0);
  const double kd = root_tensor_micro(media_.root, a_, geom_.eps, geom_.L3).vertical;
  for (std::size_t col = 0; col < ncol; ++col) {
    if (geom_.label2d[col] != kLabelP) continue;
    const double kc = root_tensor_micro(media_.root, h_lag[col], geom_.eps, geom_.L3).vertical;
    c.K_bottom[col] = (kc > 0 && kd > 0) ? 2 * kc * kd / (kc + kd) : 0.0;
    c.top_flux[col] = media_.surface.T_pot();
  }

  const double cf = geom_.eps * media_.root.k_gamma() * geom_.dy * geom_.dz;
  const std::size_t stride = ncol;
  for (const auto& f : geom_.ifaces)
    for (int k = 0; k < geom_.box.n3; ++k) {
      const std::size_t cs = std::size_t(f.s2d) + std::size_t(k) * stride;
      const std::size_t cp = std::size_t(f.p2d) + std::size_t(k) * stride;
      c.exch_coef[cp] += cf;
      c.exch_rhs[cp] += cf * h_partner[cs];
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

MicroStepReport MicroSolver::finalize_report(const MicroState& prev, const MicroState& next,
                                             PhaseStepResult& rs, PhaseStepResult& rp) const {
  MicroStepReport rep;
  rep.soil = rs.stats;
  rep.root = rp.stats;
  const double V = geom_.dx * geom_.dy * geom_.dz;

  rep.ledger_soil.storage_prev = storage_sum(soil_, prev.h_S, V);
  rep.ledger_soil.storage_new = storage_sum(soil_, next.h_S, V);
  rep.ledger_soil.boundary_in = rs.boundary_in;
  rep.ledger_soil.exchange_in = rs.exchange_in;

  rep.ledger_root.storage_prev = storage_sum(root_, prev.h_P, V);
  rep.ledger_root.storage_new = storage_sum(root_, next.h_P, V);
  rep.ledger_root.boundary_in = rp.boundary_in;
  rep.ledger_root.exchange_in = rp.exchange_in;

  rep.ledger_total = rep.ledger_soil;
  rep.ledger_total += rep.ledger_root;

  // consistent-state exchange cancellation across the interface faces
  const double cf = geom_.eps * media_.root.k_gamma() * geom_.dy * geom_.dz;
  const std::size_t stride = geom_.ncol();
  double sum_s = 0, sum_p = 0;
  for (const auto& f : geom_.ifaces)
    for (int k = 0; k < geom_.box.n3; ++k) {
      const std::size_t cs = std::size_t(f.s2d) + std::size_t(k) * stride;
      const std::size_t cp = std::size_t(f.p2d) + std::size_t(k) * stride;
      sum_s += cf * (next.h_S[cs] - next.h_P[cp]);
      sum_p += cf * (next.h_P[cp] - next.h_S[cs]);
    }
  const double scale = std::max({std::abs(sum_s), std::abs(sum_p), 1e-300});
  rep.exchange_antisym_rel = std::abs(sum_s + sum_p) / scale;
  return rep;
}

MicroStepReport MicroSolver::step_rothe(MicroState& state, const SolverSettings& s,
                                        double tau) {
  const std::size_t n = geom_.box.size();
  const MicroState prev = state;

  std::vector<double> theta0_s(n, 0.0), theta0_p(n, 0.0);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c) {
    if (soil_.active[c]) theta0_s[c] = soil_.theta(c, prev.h_S[c]);
    if (root_.active[c]) theta0_p[c] = root_.theta(c, prev.h_P[c]);
  }

  PhaseCoefficients cs, cp;
  assemble_soil(prev.h_S, prev.h_P, cs);
  assemble_root(prev.h_P, prev.h_S, cp);

  const double V = geom_.dx * geom_.dy * geom_.dz;
  const double target_s = 10.0 * s.tol_nl * storage_sum(soil_, prev.h_S, V);
  const double target_p =
      10.0 * s.tol_nl * std::max(storage_sum(root_, prev.h_P, V), 1e-30);
  const double Ls = range_stabilizer(
      [this](double h) {
        return std::max(media_.soil_R.capacity(h), media_.soil_B.capacity(h));
      },
      prev.h_S, soil_.active, {});
  const double Lp = range_stabilizer([this](double h) { return media_.root.capacity(h); },
                                     prev.h_P, root_.active, {media_.root.h_ae});

  PhaseStepResult rs =
      phase_step_stabilized(soil_, cs, theta0_s, s, Ls, L_soil_, tau, target_s, state.h_S);
  PhaseStepResult rp =
      phase_step_stabilized(root_, cp, theta0_p, s, Lp, L_root_, tau, target_p, state.h_P);

  state.t = prev.t + tau;
  return finalize_report(prev, state, rs, rp);
}

MicroStepReport MicroSolver::step_implicit(MicroState& state, const SolverSettings& s,
                                           double tau) {
  const std::size_t n = geom_.box.size();
  const MicroState prev = state;

  std::vector<double> theta0_s(n, 0.0), theta0_p(n, 0.0);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c) {
    if (soil_.active[c]) theta0_s[c] = soil_.theta(c, prev.h_S[c]);
    if (root_.active[c]) theta0_p[c] = root_.theta(c, prev.h_P[c]);
  }

  const double V = geom_.dx * geom_.dy * geom_.dz;
  const double target_s = 10.0 * s.tol_nl * storage_sum(soil_, prev.h_S, V);
  const double target_p =
      10.0 * s.tol_nl * std::max(storage_sum(root_, prev.h_P, V), 1e-30);
  const double Ls = range_stabilizer(
      [this](double h) {
        return std::max(media_.soil_R.capacity(h), media_.soil_B.capacity(h));
      },
      prev.h_S, soil_.active, {});
  const double Lp = range_stabilizer([this](double h) { return media_.root.capacity(h); },
                                     prev.h_P, root_.active, {media_.root.h_ae});

  MicroStepReport rep;
  const int max_outer = 60;
  for (int outer = 0;; ++outer) {
    if (outer == max_outer)
      throw SolverError("fully implicit step: outer coupling loop did not converge", 0.0);
    MicroState it_prev = state;
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
      rep.soil.nonlinear_iterations += outer;
      break;
    }
  }
  return rep;
}

MicroStepReport MicroSolver::step(MicroState& state, const SolverSettings& settings,
                                  double tau) {
  return settings.scheme == Scheme::rothe ? step_rothe(state, settings, tau)
                                          : step_implicit(state, settings, tau);
}

void MicroSolver::average_to_macro(const MicroState& state, const kernels::Box3& macro_box,
                                   std::vector<double>& hbar_S, std::vector<double>& hbar_P,
                                   int* flagged) const {
  const int M1 = macro_box.n1, M2 = macro_box.n2, M3 = macro_box.n3;
  const int N1 = geom_.box.n1, N2 = geom_.box.n2, N3 = geom_.box.n3;
  if (N1 % M1 || N2 % M2 || N3 % M3)
    throw AlignmentError("average_to_macro: macro grid does not divide the fine grid");
  if (geom_.dims == MicroDims::d3 && (geom_.m1 % M1 || geom_.m2 % M2))
    throw AlignmentError("average_to_macro: macro grid not aligned to the eps-tiling");
  if (geom_.dims == MicroDims::strip && geom_.m2 % M2)
    throw AlignmentError("average_to_macro: macro grid not aligned to the eps-tiling");

  const int b1 = N1 / M1, b2 = N2 / M2, b3 = N3 / M3;
  hbar_S.assign(macro_box.size(), 0.0);
  hbar_P.assign(macro_box.size(), 0.0);
  if (flagged) *flagged = 0;

  std::vector<double> last_good_S(1, 0.0), last_good_P(1, 0.0);
  for (int K = 0; K < M3; ++K)
    for (int J = 0; J < M2; ++J)
      for (int I = 0; I < M1; ++I) {
        double ssum = 0, svol = 0, psum = 0, pvol = 0;
        for (int k = K * b3; k < (K + 1) * b3; ++k)
          for (int j = J * b2; j < (J + 1) * b2; ++j)
            for (int i = I * b1; i < (I + 1) * b1; ++i) {
              const std::size_t c = geom_.box.idx(i, j, k);
              if (soil_.active[c]) {
                ssum += state.h_S[c];
                svol += 1;
              } else {
                psum += state.h_P[c];
                pvol += 1;
              }
            }
        const std::size_t mc = macro_box.idx(I, J, K);
        if (svol > 0) {
          hbar_S[mc] = ssum / svol;
          last_good_S[0] = hbar_S[mc];
        } else {
          hbar_S[mc] = last_good_S[0];
          if (flagged) ++*flagged;
        }
        if (pvol > 0) {
          hbar_P[mc] = psum / pvol;
          last_good_P[0] = hbar_P[mc];
        } else {
          hbar_P[mc] = last_good_P[0];
          if (flagged) ++*flagged;
        }
      }
}

double MicroSolver::contraction_metric(const MicroState& s1, const MicroState& s2) const {
  if (s1.h_S.size() != s2.h_S.size()) throw AlignmentError("contraction metric: mismatched grids");
  const std::size_t n = geom_.box.size();
  const double V = geom_.dx * geom_.dy * geom_.dz;
  std::vector<double> vals(n, 0.0);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c) {
    double v = 0;
    if (soil_.active[c])
      v += std::max(soil_.theta(c, s1.h_S[c]) - soil_.theta(c, s2.h_S[c]), 0.0);
    if (root_.active[c])
      v += std::max(root_.theta(c, s1.h_P[c]) - root_.theta(c, s2.h_P[c]), 0.0);
    vals[c] = V * v;
  }
  return kernels::sum(vals);
}

double MicroSolver::energy_soil(const MicroState& s) const {
  const std::size_t n = geom_.box.size();
  const std::size_t ncol = geom_.ncol();
  const double V = geom_.dx * geom_.dy * geom_.dz;
  std::vector<double> vals(n, 0.0);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c)
    if (soil_.active[c])
      vals[c] = V * media_.retention_primitive(
                        geom_.label2d[c % ncol] == kLabelR ? Medium::R : Medium::B, s.h_S[c]);
  return kernels::sum(vals);
}

double MicroSolver::energy_root(const MicroState& s) const {
  const std::size_t n = geom_.box.size();
  const double V = geom_.dx * geom_.dy * geom_.dz;
  std::vector<double> vals(n, 0.0);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c)
    if (root_.active[c]) vals[c] = V * media_.retention_primitive(Medium::P, s.h_P[c]);
  return kernels::sum(vals);
}

double MicroSolver::max_head(const MicroState& s) const {
  double m = -1e300;
  for (std::size_t c = 0; c < geom_.box.size(); ++c) {
    if (soil_.active[c]) m = std::max(m, s.h_S[c]);
    if (root_.active[c]) m = std::max(m, s.h_P[c]);
  }
  return m;
}

void run_micro(MicroSolver& solver, MicroState& state, double duration,
               const std::vector<double>& snapshot_times, const SolverSettings& settings,
               const MicroRunCallbacks& cb) {
  MicroState backup;
  advance_time(
      state.t, duration, snapshot_times, settings, [&] { return state.t; },
      [&](double tau) {
        MicroStepReport rep = solver.step(state, settings, tau);
        if (cb.on_step) cb.on_step(state, rep);
        return rep.soil.nonlinear_iterations + rep.root.nonlinear_iterations;
      },
      [&] { backup = state; }, [&] { state = backup; },
      [&] {
        if (cb.on_snapshot) cb.on_snapshot(state);
      });
}

}  // namespace rhizohom
