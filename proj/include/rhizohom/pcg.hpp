#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rhizohom/kernels.hpp"

namespace rhizohom {

struct PcgResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

// Jacobi-preconditioned conjugate gradients, matrix-free. `project` is
// applied to the residual and preconditioned residual each iteration; it is
// how the unit-cell solves stay orthogonal to the constant nullspace. All
// reductions use the deterministic chunked kernels, so iterates are bitwise
// reproducible for any thread count. Inside an outer parallel region (table
// builds) the kernels degrade to the calling thread with identical results.
template <class Apply, class Project>
PcgResult pcg(std::size_t n, Apply&& apply, const double* jacobi_diag, const double* b,
              double* x, double tol, int max_iter, Project&& project) {
  std::vector<double> r(n), z(n), p(n), q(n);
  std::span<const double> bs(b, n);

  const double bnorm = std::sqrt(kernels::dot(bs, bs));
  PcgResult res;
  if (bnorm == 0.0) {
    kernels::fill({x, n}, 0.0);
    res.converged = true;
    return res;
  }

  apply(x, q.data());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)n; ++i) r[i] = b[i] - q[i];
  project(r.data());

#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)n; ++i) z[i] = r[i] / jacobi_diag[i];
  project(z.data());
  kernels::copy(z, p);
  double rz = kernels::dot(r, z);

  for (int it = 0; it < max_iter; ++it) {
    const double rnorm = std::sqrt(kernels::dot(r, r));
    res.rel_residual = rnorm / bnorm;
    res.iterations = it;
    if (rnorm <= tol * bnorm) {
      res.converged = true;
      return res;
    }
    apply(p.data(), q.data());
    const double pq = kernels::dot(p, q);
    if (pq <= 0.0) break;  // operator lost positivity; bail out
    const double alphak = rz / pq;
    kernels::axpy(alphak, p, {x, n});
    kernels::axpy(-alphak, q, r);
    project(r.data());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i) z[i] = r[i] / jacobi_diag[i];
    project(z.data());
    const double rz_new = kernels::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    kernels::xpay(z, beta, p);
  }
  const double rnorm = std::sqrt(kernels::dot(r, r));
  res.rel_residual = rnorm / bnorm;
  res.converged = rnorm <= tol * bnorm;
  return res;
}

struct NoProject {
  void operator()(double*) const {}
};

}  // namespace rhizohom
