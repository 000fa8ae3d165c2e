#include "rhizohom/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rhizohom::kernels {

namespace {
int g_thread_cap = 0;  // 0 = no cap
}

int max_threads() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
#else
  int n = 1;
#endif
  if (g_thread_cap > 0) n = std::min(n, g_thread_cap);
  return n;
}

void set_thread_cap(int n) {
  g_thread_cap = n;
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

namespace {

inline double chunk_dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

inline double chunk_sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

inline double chunk_sum_abs(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(x[i]);
  return s;
}

template <class ChunkFn>
double chunked_reduce(std::size_t n, ChunkFn&& fn, bool parallel) {
  const std::size_t nchunks = (n + reduce_chunk - 1) / reduce_chunk;
  if (nchunks <= 1) return fn(0, n);
  std::vector<double> partial(nchunks);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < (long long)nchunks; ++c) {
      const std::size_t lo = std::size_t(c) * reduce_chunk;
      partial[c] = fn(lo, std::min(n, lo + reduce_chunk) - lo);
    }
  } else {
    for (std::size_t c = 0; c < nchunks; ++c) {
      const std::size_t lo = c * reduce_chunk;
      partial[c] = fn(lo, std::min(n, lo + reduce_chunk) - lo);
    }
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

}  // namespace

double dot(std::span<const double> x, std::span<const double> y) {
  const double* px = x.data();
  const double* py = y.data();
  return chunked_reduce(
      x.size(), [&](std::size_t lo, std::size_t n) { return chunk_dot(px + lo, py + lo, n); },
      true);
}

double dot_serial(std::span<const double> x, std::span<const double> y) {
  const double* px = x.data();
  const double* py = y.data();
  return chunked_reduce(
      x.size(), [&](std::size_t lo, std::size_t n) { return chunk_dot(px + lo, py + lo, n); },
      false);
}

double sum(std::span<const double> x) {
  const double* px = x.data();
  return chunked_reduce(
      x.size(), [&](std::size_t lo, std::size_t n) { return chunk_sum(px + lo, n); }, true);
}

double sum_serial(std::span<const double> x) {
  const double* px = x.data();
  return chunked_reduce(
      x.size(), [&](std::size_t lo, std::size_t n) { return chunk_sum(px + lo, n); }, false);
}

double sum_abs(std::span<const double> x) {
  const double* px = x.data();
  return chunked_reduce(
      x.size(), [&](std::size_t lo, std::size_t n) { return chunk_sum_abs(px + lo, n); }, true);
}

double sum_abs_serial(std::span<const double> x) {
  const double* px = x.data();
  return chunked_reduce(
      x.size(), [&](std::size_t lo, std::size_t n) { return chunk_sum_abs(px + lo, n); }, false);
}

double max_abs(std::span<const double> x) {
  double m = 0.0;
#pragma omp parallel for schedule(static) reduction(max : m)
  for (long long i = 0; i < (long long)x.size(); ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

double max_val(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  double m = x[0];
#pragma omp parallel for schedule(static) reduction(max : m)
  for (long long i = 0; i < (long long)x.size(); ++i) m = std::max(m, x[i]);
  return m;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)x.size(); ++i) y[i] += a * x[i];
}

void xpay(std::span<const double> x, double a, std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)x.size(); ++i) y[i] = x[i] + a * y[i];
}

void copy(std::span<const double> x, std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)x.size(); ++i) y[i] = x[i];
}

void fill(std::span<double> x, double v) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)x.size(); ++i) x[i] = v;
}

namespace {

template <bool Parallel>
void apply_box_fv_impl(const Box3& box, std::span<const double> diag,
                       std::span<const double> tx, std::span<const double> ty,
                       std::span<const double> tz, std::span<const double> x,
                       std::span<double> y) {
  const int n1 = box.n1, n2 = box.n2, n3 = box.n3;
  const long long nplane = (long long)n1 * n2;
#pragma omp parallel for schedule(static) if (Parallel)
  for (long long k = 0; k < n3; ++k) {
    for (int j = 0; j < n2; ++j) {
      std::size_t c = box.idx(0, j, (int)k);
      for (int i = 0; i < n1; ++i, ++c) {
        double v = diag[c] * x[c];
        if (i + 1 < n1) v -= tx[c] * x[c + 1];
        if (i > 0) v -= tx[c - 1] * x[c - 1];
        if (j + 1 < n2) v -= ty[c] * x[c + n1];
        if (j > 0) v -= ty[c - n1] * x[c - n1];
        if (k + 1 < n3) v -= tz[c] * x[c + nplane];
        if (k > 0) v -= tz[c - nplane] * x[c - nplane];
        y[c] = v;
      }
    }
  }
}

template <bool Parallel>
void apply_periodic_fv2_impl(int n, std::span<const double> diag,
                             std::span<const double> tx, std::span<const double> ty,
                             std::span<const double> x, std::span<double> y) {
  const long long nn = n;
#pragma omp parallel for schedule(static) if (Parallel)
  for (long long j = 0; j < nn; ++j) {
    const std::size_t row = std::size_t(j) * n;
    const std::size_t rowp = std::size_t((j + 1) % n) * n;
    const std::size_t rowm = std::size_t((j + n - 1) % n) * n;
    for (int i = 0; i < n; ++i) {
      const std::size_t c = row + i;
      const std::size_t cxp = row + std::size_t((i + 1) % n);
      const std::size_t cxm = row + std::size_t((i + n - 1) % n);
      double v = diag[c] * x[c];
      v -= tx[c] * x[cxp];
      v -= tx[cxm] * x[cxm];
      v -= ty[c] * x[rowp + i];
      v -= ty[rowm + i] * x[rowm + i];
      y[c] = v;
    }
  }
}

}  // namespace

void apply_box_fv(const Box3& box, std::span<const double> diag,
                  std::span<const double> tx, std::span<const double> ty,
                  std::span<const double> tz, std::span<const double> x,
                  std::span<double> y) {
  apply_box_fv_impl<true>(box, diag, tx, ty, tz, x, y);
}

void apply_box_fv_serial(const Box3& box, std::span<const double> diag,
                         std::span<const double> tx, std::span<const double> ty,
                         std::span<const double> tz, std::span<const double> x,
                         std::span<double> y) {
  apply_box_fv_impl<false>(box, diag, tx, ty, tz, x, y);
}

void apply_periodic_fv2(int n, std::span<const double> diag,
                        std::span<const double> tx, std::span<const double> ty,
                        std::span<const double> x, std::span<double> y) {
  apply_periodic_fv2_impl<true>(n, diag, tx, ty, x, y);
}

void apply_periodic_fv2_serial(int n, std::span<const double> diag,
                               std::span<const double> tx, std::span<const double> ty,
                               std::span<const double> x, std::span<double> y) {
  apply_periodic_fv2_impl<false>(n, diag, tx, ty, x, y);
}

}  // namespace rhizohom::kernels
