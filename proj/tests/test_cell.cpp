#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rhizohom/cell.hpp"

using namespace rhizohom;

namespace {

UnitCellGeometry disk_geom(double rP, double rR, int N) {
  UnitCellGeometry g;
  g.r_P = rP;
  g.r_R = rR;
  g.N = N;
  g.mode = CellMode::disk;
  return g;
}

double max_entry_diff(const SymTensor2& a, const SymTensor2& b) {
  return std::max({std::abs(a.a11 - b.a11), std::abs(a.a12 - b.a12),
                   std::abs(a.a22 - b.a22)});
}

}  // namespace

TEST_CASE("classification: no hole when r_P = 0") {
  CellClassification cls = classify_cell(disk_geom(0.0, 0.35, 64));
  CHECK(cls.frac_P == 0.0);
  CHECK(cls.gamma_P.empty());
  CHECK(cls.perimeter == 0.0);
}

TEST_CASE("classification: commensurate laminate strips are exact") {
  // fractions (0.2, 0.3, 0.5) via the same-area mapping
  UnitCellGeometry g;
  g.mode = CellMode::laminate;
  g.r_P = std::sqrt(0.2 / std::numbers::pi);
  g.r_R = std::sqrt(0.5 / std::numbers::pi);
  g.N = 100;
  CellClassification cls = classify_cell(g);
  CHECK(cls.frac_P == doctest::Approx(0.20).epsilon(1e-14));
  CHECK(cls.frac_R == doctest::Approx(0.30).epsilon(1e-14));
  CHECK(cls.frac_B == doctest::Approx(0.50).epsilon(1e-14));
  // two interface faces per row
  CHECK(cls.gamma_P.size() == 2 * 100);
  CHECK(cls.perimeter == doctest::Approx(2.0));
}

TEST_CASE("classification: disk fractions against the fine-count oracle") {
  const double target = std::numbers::pi * 0.04;
  CellClassification c256 = classify_cell(disk_geom(0.2, 0.35, 256));
  CHECK(std::abs(c256.frac_P - target) <= 2.0 / 256);
  CellClassification c4096 = classify_cell(disk_geom(0.2, 0.35, 4096));
  CHECK(std::abs(c256.frac_P - c4096.frac_P) <= 2.0 / 256);
  CHECK(std::abs(c4096.frac_P - target) <= 2.0 / 4096);
  // fractions sum to one
  CHECK(c256.frac_P + c256.frac_R + c256.frac_B == doctest::Approx(1.0).epsilon(1e-14));
  // each P cell's non-P neighbours contribute exactly one face
  std::size_t recount = 0;
  const int N = c256.N;
  auto wrap = [N](int i) { return (i + N) % N; };
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      if (c256.label[std::size_t(j) * N + i] != kLabelP) continue;
      recount += (c256.label[std::size_t(j) * N + wrap(i + 1)] != kLabelP);
      recount += (c256.label[std::size_t(j) * N + wrap(i - 1)] != kLabelP);
      recount += (c256.label[std::size_t(wrap(j + 1)) * N + i] != kLabelP);
      recount += (c256.label[std::size_t(wrap(j - 1)) * N + i] != kLabelP);
    }
  CHECK(recount == c256.gamma_P.size());
}

TEST_CASE("classification: geometry errors") {
  CHECK_THROWS_AS(classify_cell(disk_geom(0.2, 0.499, 64)), GeometryError);  // margin
  CHECK_THROWS_AS(classify_cell(disk_geom(0.2, 0.35, 8)), GeometryError);    // N too small
  CHECK_THROWS_AS(classify_cell(disk_geom(0.4, 0.35, 64)), GeometryError);   // r_P >= r_R
}

TEST_CASE("corrector: uniform unperforated cell gives zero corrector and identity") {
  CellClassification cls = classify_cell(disk_geom(0.0, 0.35, 64));
  CorrectorSolution sol = solve_corrector(cls, 1.0, 1.0, 0);
  for (double w : sol.w) CHECK(w == 0.0);
  SymTensor2 a = ahat(cls, 1.0);
  CHECK(std::abs(a.a11 - 1.0) <= 1e-10);
  CHECK(std::abs(a.a22 - 1.0) <= 1e-10);
  CHECK(std::abs(a.a12) <= 1e-10);
}

TEST_CASE("corrector: mean-zero and small residual on the disk cell") {
  CellClassification cls = classify_cell(disk_geom(0.2, 0.35, 64));
  CorrectorSolution sol = solve_corrector(cls, 4.0, 1.0, 0);
  CHECK(sol.residual <= 1e-10);
  double mean = 0;
  std::size_t nsoil = 0;
  for (std::size_t c = 0; c < cls.size(); ++c)
    if (cls.label[c] != kLabelP) {
      mean += sol.w[c];
      ++nsoil;
    }
  CHECK(std::abs(mean / double(nsoil)) <= 1e-12);
}

TEST_CASE("laminate: longitudinal corrector vanishes, analytic means are exact") {
  // no hole; half rho = 4, half 1
  UnitCellGeometry g;
  g.mode = CellMode::laminate;
  g.r_P = 0.0;
  g.r_R = std::sqrt(0.5 / std::numbers::pi);
  g.N = 64;
  CellClassification cls = classify_cell(g);
  CHECK(cls.frac_P == 0.0);
  CHECK(cls.frac_R == doctest::Approx(0.5).epsilon(1e-14));

  CorrectorSolution s1 = solve_corrector(cls, 4.0, 1.0, 1);  // along the strips
  for (double w : s1.w) CHECK(w == 0.0);

  SymTensor2 a = ahat(cls, 4.0);
  CHECK(a.a11 == doctest::Approx(1.6).epsilon(1e-10));  // harmonic mean
  CHECK(a.a22 == doctest::Approx(2.5).epsilon(1e-10));  // arithmetic mean
  CHECK(std::abs(a.a12) <= 1e-10);
}

TEST_CASE("contrast factorization: ahat depends only on the ratio") {
  CellClassification cls = classify_cell(disk_geom(0.2, 0.35, 64));
  const double rho = 4.0;
  SymTensor2 a = ahat(cls, rho);
  for (double c : {1.0, 10.0}) {
    SymTensor2 raw = homogenized_2x2(cls, c * rho, c);
    SymTensor2 scaled{raw.a11 / c, raw.a12 / c, raw.a22 / c};
    CHECK(std::abs(scaled.a11 - a.a11) <= 1e-10 * std::abs(a.a11));
    CHECK(std::abs(scaled.a22 - a.a22) <= 1e-10 * std::abs(a.a22));
    CHECK(std::abs(scaled.a12 - a.a12) <= 1e-10 * std::max(1.0, std::abs(a.a12)));
  }
}

TEST_CASE("disk symmetry and classical bounds") {
  CellClassification cls = classify_cell(disk_geom(0.2, 0.35, 128));
  for (double rho : {0.1, 1.0, 4.0, 50.0}) {
    SymTensor2 a = ahat(cls, rho);
    // four-fold symmetry of the disk geometry
    CHECK(std::abs(a.a11 - a.a22) <= 2.0 / 128);
    CHECK(std::abs(a.a12) <= 1e-8);
    const auto eig = a.eigenvalues();
    const double voigt = cls.frac_R * rho + cls.frac_B;
    CHECK(eig[0] >= -1e-12);  // Reuss bound is zero with a hole
    CHECK(eig[1] <= voigt + 1e-9);
  }
  // rho = 1 with a hole: strictly below the Voigt bound 1 - frac_P
  SymTensor2 a1 = ahat(cls, 1.0);
  CHECK(a1.a11 < 1.0 - cls.frac_P + 1e-9);
  CHECK(a1.a11 > 0.5);  // sanity: a 12.6% hole cannot halve the conductivity
}

TEST_CASE("grid convergence of the disk tensor is monotone") {
  double prev_diff = 1e300;
  SymTensor2 prev{};
  bool have_prev = false;
  for (int N : {64, 128, 256, 512}) {
    CellClassification cls = classify_cell(disk_geom(0.2, 0.35, N));
    SymTensor2 a = ahat(cls, 4.0);
    if (have_prev) {
      const double d = max_entry_diff(a, prev);
      CHECK(d < prev_diff);
      prev_diff = d;
    }
    prev = a;
    have_prev = true;
  }
}

TEST_CASE("effective table: interpolation and range errors") {
  UnitCellGeometry g = disk_geom(0.2, 0.35, 64);
  EffectiveTable table = build_effective_table(g, log_rho_grid(0.1, 10.0, 17));
  // node reproduction
  SymTensor2 at_node = table.interpolate(table.rho[3]);
  CHECK(at_node.a11 == doctest::Approx(table.ahat[3].a11).epsilon(1e-14));
  // midpoint interpolation error <= 0.5% against a direct solve
  const double mid = std::sqrt(table.rho[7] * table.rho[8]);
  CellClassification cls = classify_cell(g);
  SymTensor2 direct = ahat(cls, mid);
  SymTensor2 interp = table.interpolate(mid);
  CHECK(std::abs(interp.a11 - direct.a11) / direct.a11 <= 0.005);
  CHECK(std::abs(interp.a22 - direct.a22) / direct.a22 <= 0.005);
  CHECK_THROWS_AS(table.interpolate(0.01), TableRangeError);
  CHECK_THROWS_AS(table.interpolate(100.0), TableRangeError);
}

TEST_CASE("effective 3x3 tensor") {
  UnitCellGeometry g0 = disk_geom(0.0, 0.35, 64);
  EffectiveTable t0 = build_effective_table(g0, log_rho_grid(0.5, 2.0, 3));
  // K_R = K_B = K with no hole: K * identity
  EffectiveTensor3 e0 = effective_tensor(t0, 3e-6, 3e-6);
  CHECK(e0.k11 == doctest::Approx(3e-6).epsilon(1e-9));
  CHECK(e0.k22 == doctest::Approx(3e-6).epsilon(1e-9));
  CHECK(e0.k33 == doctest::Approx(3e-6).epsilon(1e-12));
  CHECK(e0.k12 == doctest::Approx(0.0));

  UnitCellGeometry g = disk_geom(0.2, 0.35, 128);
  EffectiveTable t = build_effective_table(g, log_rho_grid(0.5, 2.0, 3));
  // vertical entry is the area-weighted arithmetic mean
  EffectiveTensor3 e = effective_tensor(t, 3e-6, 3e-6);
  CHECK(e.k33 == doctest::Approx((1.0 - t.frac_P) * 3e-6).epsilon(1e-12));
  CHECK(std::abs((1.0 - t.frac_P) - (1.0 - std::numbers::pi * 0.04)) <= 2.0 / 128);
  // doubling both conductivities doubles every entry
  EffectiveTensor3 e2 = effective_tensor(t, 6e-6, 6e-6);
  CHECK(e2.k11 == doctest::Approx(2 * e.k11).epsilon(1e-12));
  CHECK(e2.k33 == doctest::Approx(2 * e.k33).epsilon(1e-12));
}

TEST_CASE("table build records residuals and fractions") {
  EffectiveTable t = build_effective_table(disk_geom(0.2, 0.35, 64), log_rho_grid(0.5, 2, 3));
  for (double r : t.residuals) CHECK(r <= 1e-10);
  CHECK(t.frac_P > 0.1);
  CHECK(t.perimeter > 0.0);
  CHECK(t.frac_P + t.frac_R + t.frac_B == doctest::Approx(1.0).epsilon(1e-14));
}
