#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rhizohom/constitutive.hpp"
#include "rhizohom/solvercore.hpp"

using namespace rhizohom;

namespace {

struct Column {
  StructuredProblem prob;
  SoilHydraulics soil;
  double L3 = 1.0;
  int n3 = 24;

  explicit Column(int nz = 24, bool dirichlet = true) : n3(nz) {
    soil.theta_res = 0.08;
    soil.theta_sat = 0.40;
    soil.alpha = 1.5;
    soil.n = 1.6;
    soil.K_sat = 8e-6;
    soil.delta = 0.0032;
    prob.box = {1, 1, nz};
    prob.dx = 1.0;
    prob.dy = 1.0;
    prob.dz = L3 / nz;
    if (dirichlet) prob.bottom_dirichlet = 0.0;
    prob.theta = [this](std::size_t, double h) { return soil.theta(h); };
    prob.capacity = [this](std::size_t, double h) { return soil.capacity(h); };
  }

  double z_center(int k) const { return -L3 + (k + 0.5) * prob.dz; }

  std::vector<double> hydrostatic() const {
    std::vector<double> h(n3);
    for (int k = 0; k < n3; ++k) h[k] = -(z_center(k) + L3);
    return h;
  }

  PhaseCoefficients coefficients(const std::vector<double>& h_lag, double top_flux) const {
    PhaseCoefficients c;
    const std::size_t n = prob.n();
    c.Kx.assign(n, 0.0);
    c.Ky.assign(n, 0.0);
    c.Kz.resize(n);
    for (std::size_t i = 0; i < n; ++i) c.Kz[i] = soil.conductivity(h_lag[i]);
    if (prob.bottom_dirichlet) {
      const double kc = soil.conductivity(h_lag[0]);
      const double kd = soil.conductivity(*prob.bottom_dirichlet);
      c.K_bottom.assign(1, 2 * kc * kd / (kc + kd));
    }
    c.top_flux.assign(1, top_flux);
    return c;
  }

  SolverSettings settings() const {
    SolverSettings s;
    s.L_stab = 1.05 * capacity_sup_scan([&](double h) { return soil.capacity(h); }, -1e3, 10);
    return s;
  }

  double storage(const std::vector<double>& h) const {
    double m = 0;
    for (int k = 0; k < n3; ++k) m += prob.cell_volume() * soil.theta(h[k]);
    return m;
  }

  // advance with the Rothe scheme (coefficients lagged one step)
  PhaseStepResult advance(std::vector<double>& h, double tau, double top_flux,
                          const SolverSettings& s) const {
    std::vector<double> theta0(prob.n());
    for (std::size_t i = 0; i < prob.n(); ++i) theta0[i] = soil.theta(h[i]);
    PhaseCoefficients c = coefficients(h, top_flux);
    const double target = 10.0 * s.tol_nl * storage(h);
    return phase_step(prob, c, theta0, s, tau, target, h);
  }
};

}  // namespace

TEST_CASE("hydrostatic equilibrium is a fixed point of the step") {
  Column col;
  std::vector<double> h = col.hydrostatic();
  const std::vector<double> h0 = h;
  SolverSettings s = col.settings();
  for (int i = 0; i < 5; ++i) {
    PhaseStepResult r = col.advance(h, 300.0, 0.0, s);
    CHECK(r.stats.nonlinear_iterations == 0);  // accepted before any solve
  }
  for (int k = 0; k < col.n3; ++k) CHECK(std::abs(h[k] - h0[k]) <= 1e-10);
}

TEST_CASE("linear regime matches a direct backward-Euler solve") {
  // constant capacity and conductivity: one step solves a linear system that a
  // dense elimination can reproduce exactly
  const int nz = 16;
  Column col(nz);
  const double c0 = 0.05, K = 5e-6, tau = 200.0, qtop = 2e-8;
  col.prob.theta = [c0](std::size_t, double h) { return 0.2 + c0 * h; };
  col.prob.capacity = [c0](std::size_t, double h) {
    (void)h;
    return c0;
  };

  std::vector<double> h(nz);
  for (int k = 0; k < nz; ++k) h[k] = -0.4 - 0.03 * k;
  const std::vector<double> h_old = h;

  PhaseCoefficients c;
  c.Kx.assign(nz, 0.0);
  c.Ky.assign(nz, 0.0);
  c.Kz.assign(nz, K);
  c.K_bottom.assign(1, K);
  c.top_flux.assign(1, qtop);

  SolverSettings s;
  s.L_stab = c0;
  std::vector<double> theta0(nz);
  for (int k = 0; k < nz; ++k) theta0[k] = 0.2 + c0 * h[k];
  phase_step(col.prob, c, theta0, s, tau, 1e-16, h);

  // dense oracle of the same backward-Euler equations
  const double V = col.prob.cell_volume();
  const double A_h = col.prob.dx * col.prob.dy;
  const double tz = K * A_h / col.prob.dz;
  const double td = 2 * K * A_h / col.prob.dz;
  std::vector<std::vector<double>> M(nz, std::vector<double>(nz, 0.0));
  std::vector<double> rhs(nz, 0.0);
  for (int k = 0; k < nz; ++k) {
    M[k][k] = V * c0 / tau;
    rhs[k] = V * c0 / tau * h_old[k];
    if (k + 1 < nz) {
      M[k][k] += tz;
      M[k][k + 1] -= tz;
      rhs[k] += tz * col.prob.dz;  // gravity up through the top face
    }
    if (k > 0) {
      M[k][k] += tz;
      M[k][k - 1] -= tz;
      rhs[k] -= tz * col.prob.dz;
    }
    if (k == 0) {
      M[k][k] += td;
      rhs[k] += td * 0.0 - K * A_h;
    }
    if (k == nz - 1) rhs[k] -= qtop * A_h;
  }
  // gaussian elimination
  for (int p = 0; p < nz; ++p) {
    for (int r = p + 1; r < nz; ++r) {
      const double f = M[r][p] / M[p][p];
      for (int cc = p; cc < nz; ++cc) M[r][cc] -= f * M[p][cc];
      rhs[r] -= f * rhs[p];
    }
  }
  std::vector<double> href(nz);
  for (int r = nz - 1; r >= 0; --r) {
    double v = rhs[r];
    for (int cc = r + 1; cc < nz; ++cc) v -= M[r][cc] * href[cc];
    href[r] = v / M[r][r];
  }
  for (int k = 0; k < nz; ++k) CHECK(h[k] == doctest::Approx(href[k]).epsilon(1e-10));
}

TEST_CASE("first-order consistency under tau halving") {
  Column col;
  SolverSettings s = col.settings();
  const double T = 1200.0;
  const double qtop = 3e-8;  // evaporation-like withdrawal to drive dynamics

  auto run_with = [&](double tau) {
    std::vector<double> h(col.n3);
    for (int k = 0; k < col.n3; ++k) h[k] = -0.8 - 0.2 * (col.z_center(k) + col.L3);
    const int steps = int(std::lround(T / tau));
    for (int i = 0; i < steps; ++i) col.advance(h, tau, qtop, s);
    return h;
  };

  auto h1 = run_with(300.0);
  auto h2 = run_with(150.0);
  auto h4 = run_with(75.0);
  double d12 = 0, d24 = 0;
  for (int k = 0; k < col.n3; ++k) {
    d12 += (h1[k] - h2[k]) * (h1[k] - h2[k]);
    d24 += (h2[k] - h4[k]) * (h2[k] - h4[k]);
  }
  const double ratio = std::sqrt(d24 / d12);
  CHECK(ratio >= 1.0 / 3.0);
  CHECK(ratio <= 2.0 / 3.0);
}

TEST_CASE("newton and l-scheme agree") {
  Column col;
  SolverSettings sl = col.settings();
  SolverSettings sn = sl;
  sn.nonlinear = NonlinearMethod::newton;
  sn.max_nl = 60;

  std::vector<double> ha(col.n3), hb(col.n3);
  for (int k = 0; k < col.n3; ++k) ha[k] = hb[k] = -0.7 - 0.1 * k * col.prob.dz;
  PhaseStepResult ra = col.advance(ha, 400.0, 4e-8, sl);
  PhaseStepResult rb = col.advance(hb, 400.0, 4e-8, sn);
  for (int k = 0; k < col.n3; ++k) CHECK(ha[k] == doctest::Approx(hb[k]).epsilon(1e-9));
  CHECK(rb.stats.nonlinear_iterations <= ra.stats.nonlinear_iterations);
  CHECK(ra.stats.residual_monotone);
  CHECK(ra.stats.capacity_sup <= sl.L_stab);
}

TEST_CASE("closed domain conserves stored water") {
  Column col(20, /*dirichlet=*/false);
  SolverSettings s = col.settings();
  std::vector<double> h(col.n3);
  for (int k = 0; k < col.n3; ++k) h[k] = -0.5 - 0.4 * std::sin(2.0 * k / col.n3);
  const double m0 = col.storage(h);
  for (int i = 0; i < 5; ++i) {
    PhaseStepResult r = col.advance(h, 200.0, 0.0, s);
    CHECK(r.boundary_in == 0.0);
    const double m1 = col.storage(h);
    CHECK(std::abs(m1 - m0) <= 1e-10 * m0);
  }
}

TEST_CASE("mass ledger: nothing changed means zero residual") {
  MassLedger l;
  l.storage_prev = 0.123;
  l.storage_new = 0.123;
  CHECK(l.residual() == 0.0);
  CHECK(l.rel_residual() == 0.0);
}

TEST_CASE("nonlinear failure raises a solver error with the residual") {
  Column col;
  SolverSettings s = col.settings();
  s.max_nl = 1;  // force failure on a non-trivial step
  std::vector<double> h(col.n3, -2.0);
  CHECK_THROWS_AS(col.advance(h, 5000.0, 1e-7, s), SolverError);
}

TEST_CASE("thomas solve matches the assembled equations") {
  kernels::Box3 box{2, 3, 12};
  const std::size_t n = box.size();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.5, 2.0);
  std::vector<double> tz(n), diag(n), rhs(n), x(n);
  for (auto& v : tz) v = dist(rng);
  for (auto& v : rhs) v = dist(rng) - 1.2;
  const std::size_t stride = std::size_t(box.n1) * box.n2;
  for (int k = 0; k < box.n3; ++k)
    for (std::size_t col = 0; col < stride; ++col) {
      const std::size_t c = col + k * stride;
      diag[c] = 1.0 + (k + 1 < box.n3 ? tz[c] : 0.0) + (k > 0 ? tz[c - stride] : 0.0);
    }
  thomas_vertical(box, diag, tz, rhs, x);
  for (std::size_t col = 0; col < stride; ++col)
    for (int k = 0; k < box.n3; ++k) {
      const std::size_t c = col + k * stride;
      double r = diag[c] * x[c] - rhs[c];
      if (k + 1 < box.n3) r -= tz[c] * x[c + stride];
      if (k > 0) r -= tz[c - stride] * x[c - stride];
      CHECK(std::abs(r) <= 1e-12);
    }
}

TEST_CASE("advance_time halves tau on failure and hits snapshots") {
  double t = 0;
  std::vector<double> taus;
  int snaps = 0;
  SolverSettings s;
  s.tau = 40.0;
  s.adaptive_tau = true;
  advance_time(
      0.0, 100.0, {0.0, 50.0, 100.0}, s, [&] { return t; },
      [&](double tau) {
        if (tau > 30.0) throw SolverError("too big", 1.0);
        taus.push_back(tau);
        t += tau;
        return 3;
      },
      [] {}, [] {}, [&] { ++snaps; });
  CHECK(t == doctest::Approx(100.0));
  CHECK(snaps == 3);
  for (double tau : taus) CHECK(tau <= 30.0);
}
