// Benchmark comparing the OpenMP kernels against their serial reference
// implementations. Prints one line per kernel and size with both timings and
// the speedup.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "rhizohom/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace rhizohom;

namespace {

double seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <class Fn>
double time_best(Fn&& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = seconds();
    fn();
    best = std::min(best, seconds() - t0);
  }
  return best;
}

}  // namespace

int main() {
#ifdef _OPENMP
  omp_set_max_active_levels(1);
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("%-22s %10s %12s %12s %8s\n", "kernel", "n", "serial(ms)", "omp(ms)",
              "speedup");

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  for (std::size_t n : {std::size_t(1) << 16, std::size_t(1) << 20, std::size_t(1) << 22}) {
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = dist(rng);
    for (auto& v : y) v = dist(rng);
    volatile double sink = 0;
    const double ts = time_best([&] { sink = sink + kernels::dot_serial(x, y); }, 5);
    const double tp = time_best([&] { sink = sink + kernels::dot(x, y); }, 5);
    std::printf("%-22s %10zu %12.3f %12.3f %8.2f\n", "dot", n, ts * 1e3, tp * 1e3, ts / tp);
  }

  for (int n : {64, 128, 192}) {
    kernels::Box3 box{n, n, 32};
    const std::size_t sz = box.size();
    std::vector<double> diag(sz, 6.0), tx(sz, 1.0), ty(sz, 1.0), tz(sz, 1.0), x(sz), y(sz);
    for (auto& v : x) v = dist(rng);
    const double ts =
        time_best([&] { kernels::apply_box_fv_serial(box, diag, tx, ty, tz, x, y); }, 5);
    const double tp = time_best([&] { kernels::apply_box_fv(box, diag, tx, ty, tz, x, y); }, 5);
    std::printf("%-22s %10zu %12.3f %12.3f %8.2f\n", "apply_box_fv", sz, ts * 1e3, tp * 1e3,
                ts / tp);
  }

  for (int n : {256, 512, 1024}) {
    const std::size_t sz = std::size_t(n) * n;
    std::vector<double> diag(sz, 4.0), tx(sz, 1.0), ty(sz, 1.0), x(sz), y(sz);
    for (auto& v : x) v = dist(rng);
    const double ts =
        time_best([&] { kernels::apply_periodic_fv2_serial(n, diag, tx, ty, x, y); }, 5);
    const double tp = time_best([&] { kernels::apply_periodic_fv2(n, diag, tx, ty, x, y); }, 5);
    std::printf("%-22s %10zu %12.3f %12.3f %8.2f\n", "apply_periodic_fv2", sz, ts * 1e3,
                tp * 1e3, ts / tp);
  }
  return 0;
}
