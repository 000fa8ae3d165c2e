#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rhizohom/macro.hpp"

using namespace rhizohom;

namespace {

MediumSet test_media() {
  MediumSet m;
  m.soil_R.theta_res = 0.05;
  m.soil_R.theta_sat = 0.45;
  m.soil_R.alpha = 3.0;
  m.soil_R.n = 1.8;
  m.soil_R.K_sat = 2e-5;
  m.soil_R.delta = 0.004;
  m.soil_B.theta_res = 0.08;
  m.soil_B.theta_sat = 0.40;
  m.soil_B.alpha = 1.5;
  m.soil_B.n = 1.6;
  m.soil_B.K_sat = 8e-6;
  m.soil_B.delta = 0.0032;
  m.root.k_r = 1e-10;  // k_gamma ~ 1e-6 1/s, visible exchange
  m.root.k_ax = 2e-10;
  m.surface.ET_o = 0.0;
  m.surface.P = 0.0;
  m.surface.K_cb = 0.0;
  m.validate();
  return m;
}

MacroConfig column_config(int n3 = 24) {
  MacroConfig c;
  c.L1 = c.L2 = c.L3 = 1.0;
  c.n1 = c.n2 = 1;
  c.n3 = n3;
  c.column_mode = true;
  c.a = 0.0;
  UnitCellGeometry g;
  g.r_P = 0.2;
  g.r_R = 0.35;
  c.w = weights_analytic(g);
  return c;
}

SolverSettings quiet_settings() {
  SolverSettings s;
  s.tau = 300.0;
  return s;
}

}  // namespace

TEST_CASE("weights: identities and validation") {
  UnitCellGeometry g;
  g.r_P = 0.2;
  g.r_R = 0.35;
  MacroWeights w = weights_analytic(g);
  CHECK(w.theta_P == doctest::Approx(std::numbers::pi * 0.04).epsilon(1e-14));
  CHECK(w.gamma == doctest::Approx(2 * std::numbers::pi * 0.2).epsilon(1e-14));
  CHECK(w.gamma_P * w.theta_P == doctest::Approx(w.gamma).epsilon(1e-12));
  CHECK(w.theta_S() == doctest::Approx(1.0 - w.theta_P).epsilon(1e-12));
  w.validate();
  MacroWeights bad = w;
  bad.gamma_P *= 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("joint hydrostatic equilibrium is preserved for 100 steps") {
  MediumSet media = test_media();
  MacroConfig cfg = column_config();
  MacroSolver solver(cfg, media, nullptr);
  MacroState st = solver.initial_state();
  const MacroState st0 = st;
  SolverSettings s = quiet_settings();
  for (int i = 0; i < 100; ++i) solver.step(st, s, s.tau);
  double drift = 0;
  for (std::size_t c = 0; c < st.h_S.size(); ++c) {
    drift = std::max(drift, std::abs(st.h_S[c] - st0.h_S[c]));
    drift = std::max(drift, std::abs(st.h_P[c] - st0.h_P[c]));
  }
  CHECK(drift <= 1e-8);
}

TEST_CASE("two-phase mass balance and exchange cancellation hold every step") {
  MediumSet media = test_media();
  media.surface.ET_o = 5e-8;
  media.surface.K_cb = 0.6;  // transpiration on
  media.surface.Ke_max = 0.8;
  MacroConfig cfg = column_config();
  cfg.a = -0.8;
  cfg.init.kind = InitialCondition::Kind::uniform;
  cfg.init.uniform_S = -0.4;
  cfg.init.uniform_P = -0.9;
  MacroSolver solver(cfg, media, nullptr);
  MacroState st = solver.initial_state();
  SolverSettings s = quiet_settings();
  for (int i = 0; i < 25; ++i) {
    MacroStepReport rep = solver.step(st, s, s.tau);
    CHECK(rep.ledger_soil.rel_residual() <= 1e-10);
    CHECK(rep.ledger_root.rel_residual() <= 1e-10);
    CHECK(rep.ledger_total.rel_residual() <= 1e-10);
    CHECK(rep.exchange_antisym_rel <= 1e-12);
  }
}

TEST_CASE("decoupled phases: zero exchange and monotone root relaxation") {
  MediumSet media = test_media();
  media.root.k_r = 0.0;  // k_gamma = 0
  MacroConfig cfg = column_config();
  cfg.init.kind = InitialCondition::Kind::uniform;
  cfg.init.uniform_S = -0.6;
  cfg.init.uniform_P = -0.5;
  MacroSolver solver(cfg, media, nullptr);
  MacroState st = solver.initial_state();
  SolverSettings s = quiet_settings();

  auto root_flux_norm = [&](const MacroState& state) {
    double sum = 0;
    for (int k = 0; k + 1 < cfg.n3; ++k) {
      const double dz = solver.dz();
      const double grad = (state.h_P[k + 1] - state.h_P[k]) / dz + 1.0;
      sum += std::abs(root_tensor_macro(media.root, state.h_P[k], cfg.L3) * grad);
    }
    return sum;
  };

  double prev_norm = root_flux_norm(st);
  for (int i = 0; i < 30; ++i) {
    MacroStepReport rep = solver.step(st, s, s.tau);
    CHECK(rep.ledger_soil.exchange_in == 0.0);
    CHECK(rep.ledger_root.exchange_in == 0.0);
    if ((i + 1) % 5 == 0) {
      const double cur = root_flux_norm(st);
      CHECK(cur <= prev_norm * (1 + 1e-9));
      prev_norm = cur;
    }
  }
}

TEST_CASE("contraction metric identities") {
  MediumSet media = test_media();
  MacroConfig cfg = column_config(12);
  MacroSolver solver(cfg, media, nullptr);
  MacroState a = solver.initial_state();
  CHECK(solver.contraction_metric(a, a) == 0.0);

  MacroState b = a;
  for (auto& h : b.h_S) h -= 0.3;
  for (auto& h : b.h_P) h -= 0.2;
  // a >= b pointwise: positive part equals the full difference
  double direct = 0;
  const double V = solver.cell_volume();
  for (std::size_t c = 0; c < a.h_S.size(); ++c) {
    direct += V * (solver.theta_star(a.h_S[c]) - solver.theta_star(b.h_S[c]));
    direct += V * cfg.w.theta_P * (media.root.theta(a.h_P[c]) - media.root.theta(b.h_P[c]));
  }
  CHECK(solver.contraction_metric(a, b) == doctest::Approx(direct).epsilon(1e-13));
  // swapped order: nothing positive
  CHECK(solver.contraction_metric(b, a) == 0.0);
}

TEST_CASE("L1 contraction between ordered runs") {
  MediumSet media = test_media();
  media.surface.ET_o = 4e-8;
  media.surface.K_cb = 0.5;
  MacroConfig c1 = column_config();
  c1.a = -0.5;
  MacroConfig c2 = c1;
  c1.init.offset_S = 0.0;
  c1.init.offset_P = 0.0;
  c2.init.offset_S = -0.4;
  c2.init.offset_P = -0.4;
  MacroSolver s1(c1, media, nullptr), s2(c2, media, nullptr);
  MacroState a = s1.initial_state(), b = s2.initial_state();
  SolverSettings s = quiet_settings();
  double prev = s1.contraction_metric(a, b);
  for (int i = 0; i < 60; ++i) {
    s1.step(a, s, s.tau);
    s2.step(b, s, s.tau);
    if ((i + 1) % 10 == 0) {
      const double cur = s1.contraction_metric(a, b);
      CHECK(cur <= prev + 1e-8);
      prev = cur;
    }
  }
}

TEST_CASE("non-positivity under transpiration") {
  MediumSet media = test_media();
  media.surface.ET_o = 6e-8;
  media.surface.K_cb = 1.0;
  media.surface.Ke_max = 1.0;
  media.surface.P = 0.0;
  MacroConfig cfg = column_config();
  cfg.a = -0.2;
  MacroSolver solver(cfg, media, nullptr);
  MacroState st = solver.initial_state();
  SolverSettings s = quiet_settings();
  double max_head = -1e300;
  for (int i = 0; i < 30; ++i) {
    solver.step(st, s, s.tau);
    for (double h : st.h_S) max_head = std::max(max_head, h);
    for (double h : st.h_P) max_head = std::max(max_head, h);
  }
  CHECK(max_head <= 1e-8);
}

TEST_CASE("transpiration drains total root storage with no supply") {
  MediumSet media = test_media();
  media.surface.ET_o = 8e-8;
  media.surface.K_cb = 1.0;
  media.root.k_r = 0.0;  // no soil supply
  MacroConfig cfg = column_config();
  cfg.a = -2.5;  // bottom cannot push water in
  cfg.init.kind = InitialCondition::Kind::uniform;
  cfg.init.uniform_S = -1.0;
  cfg.init.uniform_P = -2.0;
  MacroSolver solver(cfg, media, nullptr);
  MacroState st = solver.initial_state();
  SolverSettings s = quiet_settings();
  for (int i = 0; i < 20; ++i) {
    MacroStepReport rep = solver.step(st, s, s.tau);
    CHECK(rep.ledger_root.storage_new <= rep.ledger_root.storage_prev + 1e-15);
  }
}

TEST_CASE("column mode equals full 3D for laterally uniform data") {
  MediumSet media = test_media();
  media.surface.ET_o = 5e-8;
  media.surface.K_cb = 0.8;
  MacroConfig col = column_config(16);
  col.a = -0.5;

  UnitCellGeometry g;
  g.r_P = 0.2;
  g.r_R = 0.35;
  g.N = 32;
  EffectiveTable table = build_effective_table(g, log_rho_grid(1e-2, 1e2, 17));

  MacroConfig full = col;
  full.column_mode = false;
  full.n1 = full.n2 = 4;

  MacroSolver sc(col, media, nullptr);
  MacroSolver sf(full, media, &table);
  MacroState a = sc.initial_state(), b = sf.initial_state();
  SolverSettings s = quiet_settings();
  for (int i = 0; i < 10; ++i) {
    sc.step(a, s, s.tau);
    sf.step(b, s, s.tau);
  }
  double worst = 0;
  for (int k = 0; k < col.n3; ++k) {
    const std::size_t cf = sf.box().idx(1, 2, k);
    worst = std::max(worst, std::abs(a.h_S[k] - b.h_S[cf]));
    worst = std::max(worst, std::abs(a.h_P[k] - b.h_P[cf]));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("fully implicit and rothe schemes converge together as tau shrinks") {
  MediumSet media = test_media();
  media.surface.ET_o = 6e-8;
  media.surface.K_cb = 1.0;
  MacroConfig cfg = column_config(16);
  cfg.a = -0.6;
  cfg.init.kind = InitialCondition::Kind::uniform;
  cfg.init.uniform_S = -0.5;
  cfg.init.uniform_P = -0.8;

  auto diff_at = [&](double tau) {
    MacroSolver solver(cfg, media, nullptr);
    SolverSettings sr = quiet_settings();
    sr.tau = tau;
    SolverSettings si = sr;
    si.scheme = Scheme::fully_implicit;
    MacroState a = solver.initial_state(), b = solver.initial_state();
    const int steps = int(std::lround(2400.0 / tau));
    for (int i = 0; i < steps; ++i) {
      solver.step(a, sr, tau);
      solver.step(b, si, tau);
    }
    double d = 0;
    for (std::size_t c = 0; c < a.h_S.size(); ++c) {
      d += (a.h_S[c] - b.h_S[c]) * (a.h_S[c] - b.h_S[c]);
      d += (a.h_P[c] - b.h_P[c]) * (a.h_P[c] - b.h_P[c]);
    }
    return std::sqrt(d);
  };

  const double d1 = diff_at(600.0);
  const double d2 = diff_at(300.0);
  CHECK(d2 / d1 >= 0.3);
  CHECK(d2 / d1 <= 0.7);
}

TEST_CASE("run_macro: zero duration echoes the initial state") {
  MediumSet media = test_media();
  MacroConfig cfg = column_config(12);
  MacroSolver solver(cfg, media, nullptr);
  MacroState st = solver.initial_state();
  const MacroState st0 = st;
  int snaps = 0;
  RunCallbacks cb;
  cb.on_snapshot = [&](const MacroState& s2) {
    ++snaps;
    for (std::size_t c = 0; c < s2.h_S.size(); ++c) CHECK(s2.h_S[c] == st0.h_S[c]);
  };
  run_macro(solver, st, 0.0, {0.0}, quiet_settings(), cb);
  CHECK(snaps == 1);
  CHECK(st.t == 0.0);
}
