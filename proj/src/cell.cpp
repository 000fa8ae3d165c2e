#include "rhizohom/cell.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rhizohom/kernels.hpp"
#include "rhizohom/pcg.hpp"

namespace rhizohom {

using std::numbers::pi;

void UnitCellGeometry::validate() const {
  if (N < 16) throw GeometryError("unit cell: need N >= 16");
  if (r_P < 0.0) throw GeometryError("unit cell: need r_P >= 0");
  if (r_P > 0.0 && !(r_P < r_R)) throw GeometryError("unit cell: need r_P < r_R");
  if (!(r_R < 0.5 - 1.0 / N))
    throw GeometryError("unit cell: need r_R < 1/2 - 1/N (one-cell margin)");
}

double UnitCellGeometry::frac_P_analytic() const { return pi * r_P * r_P; }
double UnitCellGeometry::frac_R_analytic() const { return pi * (r_R * r_R - r_P * r_P); }
double UnitCellGeometry::perimeter_analytic() const { return 2.0 * pi * r_P; }

namespace {

// Centered strip layout: B | R | P | R | B with widths from the area
// fractions, rounded to whole columns.
std::vector<std::uint8_t> laminate_labels(const UnitCellGeometry& g) {
  const int N = g.N;
  const int nP = (int)std::lround(g.frac_P_analytic() * N);
  const int nPR = (int)std::lround((g.frac_P_analytic() + g.frac_R_analytic()) * N);
  const int nR = nPR - nP;
  const int p0 = (N - nP) / 2;
  const int rl = nR / 2;
  const int r0 = p0 - rl;
  const int r1 = p0 + nP + (nR - rl);
  if (r0 < 0 || r1 > N) throw GeometryError("unit cell: laminate strips do not fit");
  std::vector<std::uint8_t> lab(std::size_t(N) * N, kLabelB);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      std::uint8_t v = kLabelB;
      if (i >= p0 && i < p0 + nP) v = kLabelP;
      else if (i >= r0 && i < r1) v = kLabelR;
      lab[std::size_t(j) * N + i] = v;
    }
  return lab;
}

std::vector<std::uint8_t> disk_labels(const UnitCellGeometry& g) {
  const int N = g.N;
  std::vector<std::uint8_t> lab(std::size_t(N) * N, kLabelB);
  const double rP2 = g.r_P * g.r_P;
  const double rR2 = g.r_R * g.r_R;
  for (int j = 0; j < N; ++j) {
    const double y = (j + 0.5) / N - 0.5;
    for (int i = 0; i < N; ++i) {
      const double x = (i + 0.5) / N - 0.5;
      const double d2 = x * x + y * y;
      std::uint8_t v = kLabelB;
      if (g.r_P > 0.0 && d2 < rP2) v = kLabelP;
      else if (d2 < rR2) v = kLabelR;
      lab[std::size_t(j) * N + i] = v;
    }
  }
  return lab;
}

}  // namespace

CellClassification classify_cell(const UnitCellGeometry& geom) {
  geom.validate();
  CellClassification cls;
  cls.N = geom.N;
  cls.label = geom.mode == CellMode::disk ? disk_labels(geom) : laminate_labels(geom);

  const int N = geom.N;
  std::size_t nP = 0, nR = 0;
  for (auto v : cls.label) {
    nP += v == kLabelP;
    nR += v == kLabelR;
  }
  cls.frac_P = double(nP) / cls.size();
  cls.frac_R = double(nR) / cls.size();
  cls.frac_B = 1.0 - cls.frac_P - cls.frac_R;

  auto wrap = [N](int i) { return (i + N) % N; };
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      const int c = j * N + i;
      if (cls.label[c] != kLabelP) continue;
      const int nbr[4] = {j * N + wrap(i + 1), j * N + wrap(i - 1), wrap(j + 1) * N + i,
                          wrap(j - 1) * N + i};
      for (int f = 0; f < 4; ++f)
        if (cls.label[nbr[f]] != kLabelP) cls.gamma_P.push_back({c, nbr[f]});
    }
  cls.perimeter = double(cls.gamma_P.size()) / N;
  return cls;
}

std::array<double, 2> SymTensor2::eigenvalues() const {
  const double tr = a11 + a22;
  const double disc = std::sqrt((a11 - a22) * (a11 - a22) + 4.0 * a12 * a12);
  return {0.5 * (tr - disc), 0.5 * (tr + disc)};
}

namespace {

struct CellOperator {
  int N;
  std::vector<double> tx, ty, diag;       // periodic face transmissibilities
  std::vector<std::uint8_t> soil;         // 1 where a > 0
  std::size_t n_soil = 0;

  CellOperator(const CellClassification& cls, double a_R, double a_B) : N(cls.N) {
    const std::size_t n = cls.size();
    std::vector<double> a(n);
    soil.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
      a[c] = cls.label[c] == kLabelP ? 0.0 : (cls.label[c] == kLabelR ? a_R : a_B);
      soil[c] = a[c] > 0.0;
      n_soil += soil[c];
    }
    auto harm = [](double u, double v) {
      return (u > 0.0 && v > 0.0) ? 2.0 * u * v / (u + v) : 0.0;
    };
    tx.assign(n, 0.0);
    ty.assign(n, 0.0);
    diag.assign(n, 0.0);
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) {
        const std::size_t c = std::size_t(j) * N + i;
        tx[c] = harm(a[c], a[std::size_t(j) * N + (i + 1) % N]);
        ty[c] = harm(a[c], a[std::size_t((j + 1) % N) * N + i]);
      }
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) {
        const std::size_t c = std::size_t(j) * N + i;
        const std::size_t cxm = std::size_t(j) * N + (i + N - 1) % N;
        const std::size_t cym = std::size_t((j + N - 1) % N) * N + i;
        diag[c] = tx[c] + tx[cxm] + ty[c] + ty[cym];
        if (diag[c] == 0.0) diag[c] = 1.0;  // isolated / hole cell
      }
  }

  // rhs for direction j: b_c = sum_f a_f (e_j . n) / N
  std::vector<double> rhs(int dir) const {
    const std::size_t n = std::size_t(N) * N;
    const auto& t = dir == 0 ? tx : ty;
    std::vector<double> b(n, 0.0);
    const double h = 1.0 / N;
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) {
        const std::size_t c = std::size_t(j) * N + i;
        const std::size_t cm = dir == 0 ? std::size_t(j) * N + (i + N - 1) % N
                                        : std::size_t((j + N - 1) % N) * N + i;
        b[c] = (t[c] - t[cm]) * h;
      }
    return b;
  }

  void project(double* v) const {
    const std::size_t n = std::size_t(N) * N;
    std::vector<double> masked(n);
    for (std::size_t c = 0; c < n; ++c) masked[c] = soil[c] ? v[c] : 0.0;
    const double mean = kernels::sum(masked) / double(n_soil);
    for (std::size_t c = 0; c < n; ++c) v[c] = soil[c] ? v[c] - mean : 0.0;
  }
};

}  // namespace

CorrectorSolution solve_corrector(const CellClassification& cls, double a_R, double a_B,
                                  int j, double tol, int max_iter) {
  if (!(a_R > 0.0 && a_B > 0.0)) throw GeometryError("corrector: need positive soil coefficients");
  CellOperator op(cls, a_R, a_B);
  const std::size_t n = cls.size();
  if (max_iter <= 0) max_iter = 20 * cls.N;

  std::vector<double> b = op.rhs(j);
  op.project(b.data());

  CorrectorSolution sol;
  sol.w.assign(n, 0.0);
  auto apply = [&](const double* x, double* y) {
    kernels::apply_periodic_fv2(cls.N, op.diag, op.tx, op.ty, {x, n}, {y, n});
  };
  auto proj = [&](double* v) { op.project(v); };
  PcgResult res = pcg(n, apply, op.diag.data(), b.data(), sol.w.data(), tol, max_iter, proj);
  sol.residual = res.rel_residual;
  sol.iterations = res.iterations;
  if (!res.converged)
    throw SolverError("cell corrector solve did not converge", res.rel_residual);
  op.project(sol.w.data());
  return sol;
}

namespace {

// Flux-average assembly of the homogenized 2x2 tensor from the two
// correctors: row i sums a_f (dw^j/h + delta_ij) over direction-i faces.
SymTensor2 assemble_tensor(const CellClassification& cls, const CellOperator& op,
                           const std::vector<double>& w0, const std::vector<double>& w1) {
  const int N = cls.N;
  const double h2 = 1.0 / (double(N) * N);
  const double invh = double(N);
  double a00 = 0, a01 = 0, a10 = 0, a11 = 0;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      const std::size_t c = std::size_t(j) * N + i;
      const std::size_t cx = std::size_t(j) * N + (i + 1) % N;
      const std::size_t cy = std::size_t((j + 1) % N) * N + i;
      const double dw0x = (w0[cx] - w0[c]) * invh;
      const double dw1x = (w1[cx] - w1[c]) * invh;
      const double dw0y = (w0[cy] - w0[c]) * invh;
      const double dw1y = (w1[cy] - w1[c]) * invh;
      a00 += op.tx[c] * (dw0x + 1.0);
      a01 += op.tx[c] * dw1x;
      a10 += op.ty[c] * dw0y;
      a11 += op.ty[c] * (dw1y + 1.0);
    }
  SymTensor2 t;
  t.a11 = a00 * h2;
  t.a22 = a11 * h2;
  t.a12 = 0.5 * (a01 + a10) * h2;
  return t;
}

}  // namespace

SymTensor2 homogenized_2x2(const CellClassification& cls, double a_R, double a_B,
                           double* max_residual) {
  CellOperator op(cls, a_R, a_B);
  CorrectorSolution s0 = solve_corrector(cls, a_R, a_B, 0);
  CorrectorSolution s1 = solve_corrector(cls, a_R, a_B, 1);
  if (max_residual) *max_residual = std::max(s0.residual, s1.residual);
  return assemble_tensor(cls, op, s0.w, s1.w);
}

SymTensor2 ahat(const CellClassification& cls, double rho, double* max_residual) {
  if (!(rho > 0.0)) throw GeometryError("ahat: need rho > 0");
  return homogenized_2x2(cls, rho, 1.0, max_residual);
}

std::vector<double> log_rho_grid(double rho_min, double rho_max, int count) {
  if (!(rho_min > 0.0 && rho_max > rho_min && count >= 2))
    throw ConfigError("rho grid: need 0 < rho_min < rho_max and count >= 2");
  std::vector<double> g(count);
  const double l0 = std::log(rho_min), l1 = std::log(rho_max);
  for (int i = 0; i < count; ++i)
    g[i] = std::exp(l0 + (l1 - l0) * double(i) / double(count - 1));
  g.front() = rho_min;
  g.back() = rho_max;
  return g;
}

EffectiveTable build_effective_table(const UnitCellGeometry& geom,
                                     const std::vector<double>& rho_grid) {
  CellClassification cls = classify_cell(geom);
  EffectiveTable table;
  table.rho = rho_grid;
  table.ahat.resize(rho_grid.size());
  table.residuals.assign(rho_grid.size(), 0.0);
  table.frac_P = cls.frac_P;
  table.frac_R = cls.frac_R;
  table.frac_B = cls.frac_B;
  table.perimeter = cls.perimeter;
  table.N = cls.N;
  table.mode = geom.mode;
  table.r_P = geom.r_P;
  table.r_R = geom.r_R;

#pragma omp parallel for schedule(dynamic)
  for (long long k = 0; k < (long long)rho_grid.size(); ++k) {
    double res = 0;
    table.ahat[k] = ahat(cls, rho_grid[k], &res);
    table.residuals[k] = res;
  }
  return table;
}

SymTensor2 EffectiveTable::interpolate(double rho_query) const {
  const double slack = 1e-12;
  if (!(rho_query >= rho.front() * (1.0 - slack) && rho_query <= rho.back() * (1.0 + slack)))
    throw TableRangeError("effective table: contrast " + std::to_string(rho_query) +
                          " outside tabulated range");
  const double q = std::clamp(rho_query, rho.front(), rho.back());
  auto it = std::upper_bound(rho.begin(), rho.end(), q);
  std::size_t hi = std::min<std::size_t>(rho.size() - 1, std::size_t(it - rho.begin()));
  if (hi == 0) hi = 1;
  const std::size_t lo = hi - 1;
  const double t = (std::log(q) - std::log(rho[lo])) / (std::log(rho[hi]) - std::log(rho[lo]));
  SymTensor2 out;
  out.a11 = (1.0 - t) * ahat[lo].a11 + t * ahat[hi].a11;
  out.a12 = (1.0 - t) * ahat[lo].a12 + t * ahat[hi].a12;
  out.a22 = (1.0 - t) * ahat[lo].a22 + t * ahat[hi].a22;
  return out;
}

EffectiveTensor3 effective_tensor(const EffectiveTable& table, double K_R, double K_B) {
  if (!(K_R > 0.0 && K_B > 0.0))
    throw DomainError("effective tensor: need positive conductivities");
  const SymTensor2 a = table.interpolate(K_R / K_B);
  EffectiveTensor3 t;
  t.k11 = K_B * a.a11;
  t.k12 = K_B * a.a12;
  t.k22 = K_B * a.a22;
  t.k33 = table.frac_R * K_R + table.frac_B * K_B;
  return t;
}

double voigt_bound(const EffectiveTable& table, double rho) {
  return table.frac_R * rho + table.frac_B;
}

double reuss_bound(const EffectiveTable& table, double rho) {
  if (table.frac_P > 0.0) return 0.0;
  return 1.0 / (table.frac_R / rho + table.frac_B);
}

}  // namespace rhizohom
