#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rhizohom/constitutive.hpp"
#include "rhizohom/harness.hpp"

using namespace rhizohom;

namespace {

MediumSet default_media() {
  MediumSet m;
  m.validate();
  return m;
}

// independent long-double route for the appendix formulas, used as the
// high-precision cross-check of the double implementation
long double vg_theta_ld(long double tr, long double ts, long double al, long double n,
                        long double h) {
  const long double mm = 1.0L - 1.0L / n;
  const long double g = powl(1.0L + powl(fabsl(al * h), n), -mm);
  if (h >= 0) return (ts - 1.0L) * g + 1.0L;
  return tr + (ts - tr) * g;
}

// adaptive Simpson oracle (independent of the implementation's quadrature)
template <class F>
double simpson(const F& f, double a, double b, int depth) {
  const double c = 0.5 * (a + b);
  const double s1 = (b - a) / 6.0 * (f(a) + 4 * f(c) + f(b));
  const double l = (c - a) / 6.0 * (f(a) + 4 * f(0.5 * (a + c)) + f(c));
  const double r = (b - c) / 6.0 * (f(c) + 4 * f(0.5 * (c + b)) + f(b));
  if (depth <= 0 || std::abs(l + r - s1) < 1e-13) return l + r;
  return simpson(f, a, c, depth - 1) + simpson(f, c, b, depth - 1);
}

}  // namespace

TEST_CASE("soil water content: closed-form value and branch continuity") {
  SoilHydraulics s;
  s.theta_res = 0.1;
  s.theta_sat = 0.4;
  s.alpha = 2.0;
  s.n = 2.0;
  s.K_sat = 1.0;
  s.delta = 0.01;
  s.validate();

  // theta_res + (theta_sat - theta_res)/sqrt(2) at h = -0.5, frozen from a
  // 50-digit evaluation
  CHECK(s.theta(-0.5) == doctest::Approx(0.31213203435596425732).epsilon(1e-14));
  CHECK(s.theta(0.0) == doctest::Approx(0.4).epsilon(1e-14));  // both branches
  const double left = s.theta(std::nextafter(0.0, -1.0));
  CHECK(std::abs(left - s.theta(0.0)) <= 1e-10 * 0.4);

  // long-double independent route
  const long double ld = vg_theta_ld(0.1L, 0.4L, 2.0L, 2.0L, -0.7L);
  CHECK(s.theta(-0.7) == doctest::Approx(double(ld)).epsilon(1e-14));
}

TEST_CASE("soil capacity: linear-branch identities and finite differences") {
  SoilHydraulics s;
  s.theta_res = 0.1;
  s.theta_sat = 0.4;
  s.alpha = 2.0;
  s.n = 2.0;
  s.K_sat = 1.0;
  s.delta = 0.01;

  // frozen analytic value at h = -0.5
  CHECK(s.capacity(-0.5) == doctest::Approx(0.21213203435596425732).epsilon(1e-13));
  // n > 1 makes the derivative vanish at h = 0 from both sides
  CHECK(s.capacity(0.0) == 0.0);
  CHECK(s.capacity(std::nextafter(0.0, -1.0)) == doctest::Approx(0.0).epsilon(1e-12));

  // central finite-difference oracle, step 1e-6
  const double step = 1e-6;
  const double fd = (s.theta(-0.5 + step) - s.theta(-0.5 - step)) / (2 * step);
  CHECK(std::abs(s.capacity(-0.5) - fd) / fd <= 1e-6);
}

TEST_CASE("regularized soil conductivity") {
  SoilHydraulics s;
  s.theta_res = 0.1;
  s.theta_sat = 0.4;
  s.alpha = 2.0;
  s.n = 2.0;
  s.l = 0.5;
  s.K_sat = 1.0;
  s.delta = 0.01;

  // positive branch is h-independent
  CHECK(s.conductivity(5.0) == s.conductivity(500.0));
  CHECK(s.conductivity(5.0) == doctest::Approx(0.6638297800110984836).epsilon(1e-13));
  // frozen 50-digit evaluation of the two-factor Mualem expression at -0.5
  CHECK(s.conductivity(-0.5) == doctest::Approx(0.068472379996644312989).epsilon(1e-12));
  // h -> -inf limit equals the K0 recorded at construction
  CHECK(s.K0() == doctest::Approx(2.4906901710179577972e-9).epsilon(1e-11));
  CHECK(s.conductivity(-1e6) == doctest::Approx(s.K0()).epsilon(1e-6));
  // continuity at h = 0
  CHECK(std::abs(s.conductivity(std::nextafter(0.0, -1.0)) - s.conductivity(0.0)) <=
        1e-10 * s.conductivity(0.0));

  SoilHydraulics bad = s;
  bad.delta = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("root water content branches") {
  RootHydraulics r;
  r.theta_sat = 0.5;
  r.h_ae = -2.0;
  r.E = 50.0;
  r.lambda_P = 1.0;
  r.delta = 0.01;
  r.validate();

  // value at the air-entry point from both adjacent branches
  const double v = r.theta_sat + r.h_ae / r.E;
  CHECK(r.theta(r.h_ae) == doctest::Approx(v).epsilon(1e-14));
  CHECK(r.theta(std::nextafter(r.h_ae, -1e9)) == doctest::Approx(v).epsilon(1e-12));
  CHECK(r.theta(0.0) == doctest::Approx(r.theta_sat).epsilon(1e-14));
  // linear branch capacity
  CHECK(r.capacity(-1.0) == doctest::Approx(1.0 / 50.0).epsilon(1e-14));
}

TEST_CASE("regularized root conductivity kappa") {
  RootHydraulics r;
  r.theta_sat = 0.5;
  r.h_ae = -2.0;
  r.E = 50.0;
  r.lambda_P = 1.0;
  r.delta = 0.01;

  CHECK(r.kappa(0.0) == 1.0);
  CHECK(r.kappa(7.0) == 1.0);
  const double A = std::pow(1.0 + r.h_ae / (r.theta_sat * r.E), 2.0 / r.lambda_P + 1.0);
  CHECK(r.kappa(r.h_ae) == doctest::Approx(A).epsilon(1e-14));
  CHECK(r.kappa(std::nextafter(r.h_ae, -1e9)) == doctest::Approx(A).epsilon(1e-12));
  // frozen 50-digit evaluation of branch 3 at h = -4
  CHECK(r.kappa(-4.0) == doctest::Approx(0.1087316550225195637).epsilon(1e-13));
  CHECK(r.kappa(-1e5) >= r.kappa_floor() * (1 - 1e-12));
}

TEST_CASE("root tensor entries and eps scaling") {
  RootHydraulics r;
  r.r = 0.2;
  r.rho_g = 1.0;
  r.k_r = 1e-7;
  r.k_ax = 3e-6;

  const double L3 = 2.0;
  auto t1 = root_tensor_micro(r, 1.0, 0.25, L3);  // h >= 0: kappa = 1
  CHECK(t1.horizontal == doctest::Approx(3.1415926535897932385e-8).epsilon(1e-14));
  CHECK(t1.vertical == doctest::Approx(3e-6 / 2.0).epsilon(1e-14));
  auto t2 = root_tensor_micro(r, 1.0, 0.125, L3);
  CHECK(t2.horizontal == doctest::Approx(0.5 * t1.horizontal).epsilon(1e-14));
  CHECK(t2.vertical == t1.vertical);
  CHECK(root_tensor_macro(r, 1.0, L3) == doctest::Approx(t1.vertical).epsilon(1e-14));
  CHECK_THROWS_AS(root_tensor_micro(r, 0.0, 0.0, L3), GeometryError);
}

TEST_CASE("retention primitive against a quadrature oracle") {
  MediumSet m = default_media();
  m.soil_B.theta_res = 0.1;
  m.soil_B.theta_sat = 0.4;
  m.soil_B.alpha = 2.0;
  m.soil_B.n = 2.0;
  m.soil_B.delta = 0.01;

  CHECK(m.retention_primitive(Medium::B, 0.0) == 0.0);

  // oracle: theta~(h) h + Simpson integral of theta~ over [h, 0]
  auto shifted = [&](double z) { return m.soil_B.theta(z) - m.soil_B.theta_sat; };
  const double h = -1.0;
  const double oracle = shifted(h) * h + simpson(shifted, h, 0.0, 40);
  CHECK(m.retention_primitive(Medium::B, h) == doctest::Approx(oracle).epsilon(1e-8));
  // frozen 50-digit value
  CHECK(m.retention_primitive(Medium::B, -1.0) ==
        doctest::Approx(0.082381242626834169589).epsilon(1e-10));

  // second algebraic route: integral of z * capacity(z)
  auto zcap = [&](double z) { return z * m.soil_B.capacity(z); };
  const double route2 = simpson(zcap, 0.0, h, 40);
  CHECK(m.retention_primitive(Medium::B, h) == doctest::Approx(route2).epsilon(1e-8));

  for (double hh : {-30.0, -3.0, -0.3, 0.5, 2.0})
    CHECK(m.retention_primitive(Medium::P, hh) >= 0.0);
}

TEST_CASE("surface flux and runoff") {
  SurfaceForcing sf;
  sf.ET_o = 5e-8;
  sf.P = 1e-7;
  sf.C_RO = 4.0;
  sf.K_cb = 1.0;
  sf.Ke_max = 1.0;
  sf.Ke_scale = 0.5;
  sf.validate();

  // RO(0) = P exactly (the exponential terms cancel)
  CHECK(sf.runoff(0.0) == doctest::Approx(1e-7).epsilon(1e-14));
  // limits
  CHECK(sf.runoff(-1e3) == doctest::Approx(0.0));
  CHECK(sf.runoff(1e3) == doctest::Approx(1.1565176427496656518e-7).epsilon(1e-12));
  // |f| bound
  for (double h : {-100.0, -1.0, 0.0, 1.0, 100.0})
    CHECK(std::abs(sf.flux(h)) <= sf.flux_bound() * (1 + 1e-12));
  CHECK(sf.T_pot() == doctest::Approx(5e-8));
}

TEST_CASE("analysis mode shifts the curves to zero at zero") {
  MediumSet m = default_media();
  for (Medium med : {Medium::R, Medium::B, Medium::P})
    CHECK(m.water_content(med, 0.0, CurveMode::analysis) == doctest::Approx(0.0));
  CHECK(m.water_content(Medium::B, -1.0, CurveMode::analysis) < 0.0);
}

TEST_CASE("non-finite head raises a domain error") {
  MediumSet m = default_media();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(m.water_content(Medium::B, nan), DomainError);
  CHECK_THROWS_AS(m.water_capacity(Medium::P, nan), DomainError);
  CHECK_THROWS_AS(m.conductivity_soil(Medium::R, nan), DomainError);
  CHECK_THROWS_AS(m.surface.flux(nan), DomainError);
}

TEST_CASE("full constitutive property suite passes") {
  MediumSet m = default_media();
  m.surface.P = 2e-8;  // exercise the runoff identities with precipitation on
  auto checks = constitutive_property_suite(m);
  for (const auto& c : checks) {
    INFO(c.name << " " << c.detail);
    CHECK(c.pass);
  }
}
