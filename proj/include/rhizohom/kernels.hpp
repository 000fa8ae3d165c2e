#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Low-level grid kernels. Every reduction uses a fixed chunk decomposition
// combined in index order, so results are bitwise identical for any OpenMP
// thread count. The *_serial variants run the same loop structure without
// OpenMP and are kept as reference implementations for the kernel tests and
// the benchmark tool.
namespace rhizohom::kernels {

inline constexpr std::size_t reduce_chunk = std::size_t{1} << 13;

int max_threads();
void set_thread_cap(int n);

double dot(std::span<const double> x, std::span<const double> y);
double dot_serial(std::span<const double> x, std::span<const double> y);

double sum(std::span<const double> x);
double sum_serial(std::span<const double> x);

double sum_abs(std::span<const double> x);
double sum_abs_serial(std::span<const double> x);

double max_abs(std::span<const double> x);
double max_val(std::span<const double> x);

void axpy(double a, std::span<const double> x, std::span<double> y);  // y += a*x
void xpay(std::span<const double> x, double a, std::span<double> y);  // y = x + a*y
void copy(std::span<const double> x, std::span<double> y);
void fill(std::span<double> x, double v);

// y = diag*x - sum over faces t*(x_ngb), cell-centered 7-point box stencil.
// tx[c] couples cell c with its +x neighbour (last slice unused), same for
// ty, tz. No wrap-around.
struct Box3 {
  int n1 = 1, n2 = 1, n3 = 1;
  std::size_t size() const { return std::size_t(n1) * n2 * n3; }
  std::size_t idx(int i, int j, int k) const {
    return std::size_t(i) + std::size_t(n1) * (std::size_t(j) + std::size_t(n2) * k);
  }
};

void apply_box_fv(const Box3& box, std::span<const double> diag,
                  std::span<const double> tx, std::span<const double> ty,
                  std::span<const double> tz, std::span<const double> x,
                  std::span<double> y);
void apply_box_fv_serial(const Box3& box, std::span<const double> diag,
                         std::span<const double> tx, std::span<const double> ty,
                         std::span<const double> tz, std::span<const double> x,
                         std::span<double> y);

// Periodic 5-point stencil on an n-by-n cell grid (unit-cell problems).
// tx[c] couples c with its +x neighbour (wrapping), ty likewise in +y.
void apply_periodic_fv2(int n, std::span<const double> diag,
                        std::span<const double> tx, std::span<const double> ty,
                        std::span<const double> x, std::span<double> y);
void apply_periodic_fv2_serial(int n, std::span<const double> diag,
                               std::span<const double> tx,
                               std::span<const double> ty,
                               std::span<const double> x, std::span<double> y);

}  // namespace rhizohom::kernels
