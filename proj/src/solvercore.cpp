#include "rhizohom/solvercore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rhizohom/pcg.hpp"

namespace rhizohom {

double MassLedger::scale() const {
  const double flux = std::abs(boundary_in) + std::abs(exchange_in);
  return std::max({std::abs(storage_new), std::abs(storage_prev), flux, 1e-300});
}

MassLedger& MassLedger::operator+=(const MassLedger& o) {
  storage_prev += o.storage_prev;
  storage_new += o.storage_new;
  boundary_in += o.boundary_in;
  exchange_in += o.exchange_in;
  return *this;
}

void thomas_vertical(const kernels::Box3& box, const std::vector<double>& diag,
                     const std::vector<double>& tz, const std::vector<double>& rhs,
                     std::vector<double>& x) {
  const int n1 = box.n1, n2 = box.n2, n3 = box.n3;
  const std::size_t stride = std::size_t(n1) * n2;
#pragma omp parallel for schedule(static)
  for (long long col = 0; col < (long long)stride; ++col) {
    std::vector<double> cp(n3), dp(n3);
    std::size_t c0 = std::size_t(col);
    // forward sweep
    double d = diag[c0];
    cp[0] = n3 > 1 ? -tz[c0] / d : 0.0;
    dp[0] = rhs[c0] / d;
    for (int k = 1; k < n3; ++k) {
      const std::size_t c = c0 + std::size_t(k) * stride;
      const std::size_t cm = c - stride;
      const double a = -tz[cm];  // sub-diagonal
      d = diag[c] - a * cp[k - 1];
      cp[k] = k + 1 < n3 ? -tz[c] / d : 0.0;
      dp[k] = (rhs[c] - a * dp[k - 1]) / d;
    }
    // back substitution
    x[c0 + std::size_t(n3 - 1) * stride] = dp[n3 - 1];
    for (int k = n3 - 2; k >= 0; --k) {
      const std::size_t c = c0 + std::size_t(k) * stride;
      x[c] = dp[k] - cp[k] * x[c + stride];
    }
  }
}

double capacity_sup_scan(const std::function<double(double)>& capacity, double h_lo,
                         double h_hi, int samples) {
  double sup = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double h = h_lo + (h_hi - h_lo) * double(i) / samples;
    sup = std::max(sup, capacity(h));
  }
  return sup;
}

PhaseStepResult phase_step_stabilized(const StructuredProblem& prob,
                                      const PhaseCoefficients& coef,
                                      const std::vector<double>& theta0,
                                      const SolverSettings& s, double L_range,
                                      double L_global, double tau, double ledger_target,
                                      std::vector<double>& h) {
  SolverSettings st = s;
  if (s.L_stab > 0)  // explicit stabilizer: violations are reported, not retried
    return phase_step(prob, coef, theta0, st, tau, ledger_target, h);
  st.L_stab = L_range;
  std::vector<double> backup = h;
  try {
    PhaseStepResult r = phase_step(prob, coef, theta0, st, tau, ledger_target, h);
    if (r.stats.capacity_sup <= st.L_stab) return r;
  } catch (const SolverError&) {
  }
  h = backup;
  st.L_stab = std::max(L_global, L_range);
  return phase_step(prob, coef, theta0, st, tau, ledger_target, h);
}

double range_stabilizer(const std::function<double(double)>& capacity,
                        const std::vector<double>& h, const std::vector<std::uint8_t>& active,
                        const std::vector<double>& probes, double margin) {
  double lo = 1e300, hi = -1e300;
  for (std::size_t c = 0; c < h.size(); ++c) {
    if (!active.empty() && !active[c]) continue;
    lo = std::min(lo, h[c]);
    hi = std::max(hi, h[c]);
  }
  if (lo > hi) return 1.0;
  lo -= margin;
  hi += margin;
  double sup = capacity_sup_scan(capacity, lo, hi, 512);
  for (double p : probes)
    if (p >= lo && p <= hi) sup = std::max(sup, capacity(p));
  return 1.05 * std::max(sup, 1e-12);
}

void advance_time(double t0, double duration, const std::vector<double>& snapshot_times,
                  const SolverSettings& settings,
                  const std::function<double()>& current_time,
                  const std::function<int(double)>& try_step,
                  const std::function<void()>& save_state,
                  const std::function<void()>& restore_state,
                  const std::function<void()>& emit_snapshot) {
  std::vector<double> snaps = snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  if (emit_snapshot && !snaps.empty() && snaps[0] <= t0 + 1e-12 * std::max(1.0, std::abs(t0))) {
    emit_snapshot();
    ++next_snap;
  }
  if (duration <= 0) return;
  const double t_end = t0 + duration;

  double tau = settings.tau;
  const double tau_max = settings.tau_max > 0 ? settings.tau_max : 16.0 * settings.tau;
  int streak = 0;

  while (current_time() < t_end - 1e-9 * std::max(1.0, std::abs(t_end))) {
    double stop = t_end;
    if (next_snap < snaps.size()) stop = std::min(stop, snaps[next_snap]);
    double tau_try = std::min(tau, stop - current_time());

    int halvings = 0;
    int iters = 0;
    for (;;) {
      save_state();
      try {
        iters = try_step(tau_try);
        break;
      } catch (const SolverError&) {
        restore_state();
        if (!settings.adaptive_tau || halvings >= settings.max_halvings) throw;
        tau_try *= 0.5;
        tau = std::min(tau, tau_try);
        ++halvings;
        streak = 0;
      }
    }
    streak = iters <= 8 ? streak + 1 : 0;
    if (settings.adaptive_tau && streak >= 3) {
      tau = std::min(2.0 * tau, tau_max);
      streak = 0;
    }
    if (next_snap < snaps.size() &&
        current_time() >= snaps[next_snap] - 1e-9 * std::max(1.0, snaps[next_snap])) {
      if (emit_snapshot) emit_snapshot();
      ++next_snap;
    }
  }
}

namespace {

struct Assembled {
  std::vector<double> tx, ty, tz;  // face transmissibilities (m^2/s)
  std::vector<double> diag;        // sum of couplings + Dirichlet + exchange
  std::vector<double> b;           // gravity + boundary + exchange sources
  std::vector<double> volume;      // active cell volumes (0 when inactive)
  // per-column boundary bookkeeping for the ledger
  std::vector<double> td_bottom;       // Dirichlet transmissibility per column
  std::vector<double> grav_bottom;     // K_bottom * A per column
  std::vector<double> top_out;         // prescribed outward flux (m^3/s) per column
};

double harm(double u, double v) {
  return (u > 0.0 && v > 0.0) ? 2.0 * u * v / (u + v) : 0.0;
}

Assembled assemble(const StructuredProblem& prob, const PhaseCoefficients& coef) {
  const auto& box = prob.box;
  const std::size_t n = prob.n();
  const int n1 = box.n1, n2 = box.n2, n3 = box.n3;
  const std::size_t stride = std::size_t(n1) * n2;
  const double ax = prob.dy * prob.dz / prob.dx;
  const double ay = prob.dx * prob.dz / prob.dy;
  const double az = prob.dx * prob.dy / prob.dz;
  const double ah = prob.dx * prob.dy;

  Assembled out;
  out.tx.assign(n, 0.0);
  out.ty.assign(n, 0.0);
  out.tz.assign(n, 0.0);
  out.diag.assign(n, 0.0);
  out.b.assign(n, 0.0);
  out.volume.assign(n, 0.0);
  out.td_bottom.assign(stride, 0.0);
  out.grav_bottom.assign(stride, 0.0);
  out.top_out.assign(stride, 0.0);

  auto K = [&](const std::vector<double>& v, std::size_t c) {
    return prob.is_active(c) ? v[c] : 0.0;
  };

#pragma omp parallel for schedule(static)
  for (long long k = 0; k < n3; ++k)
    for (int j = 0; j < n2; ++j)
      for (int i = 0; i < n1; ++i) {
        const std::size_t c = box.idx(i, j, (int)k);
        if (!prob.is_active(c)) continue;
        out.volume[c] = prob.cell_volume();
        if (!prob.vertical_only) {
          if (i + 1 < n1) out.tx[c] = harm(K(coef.Kx, c), K(coef.Kx, c + 1)) * ax;
          if (j + 1 < n2) out.ty[c] = harm(K(coef.Ky, c), K(coef.Ky, c + n1)) * ay;
        }
        if (k + 1 < n3) out.tz[c] = harm(K(coef.Kz, c), K(coef.Kz, c + stride)) * az;
      }

  // diagonal, gravity, boundary and exchange terms
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < n3; ++k)
    for (int j = 0; j < n2; ++j)
      for (int i = 0; i < n1; ++i) {
        const std::size_t c = box.idx(i, j, (int)k);
        if (!prob.is_active(c)) {
          out.diag[c] = 1.0;
          continue;
        }
        const std::size_t col = std::size_t(j) * n1 + i;
        double d = 0.0, b = 0.0;
        if (i + 1 < n1) d += out.tx[c];
        if (i > 0) d += out.tx[c - 1];
        if (j + 1 < n2) d += out.ty[c];
        if (j > 0) d += out.ty[c - n1];
        if (k + 1 < n3) {
          d += out.tz[c];
          b += out.tz[c] * prob.dz;  // gravity through the upper face
        }
        if (k > 0) {
          d += out.tz[c - stride];
          b -= out.tz[c - stride] * prob.dz;
        }
        if (k == 0 && prob.bottom_dirichlet) {
          const double kb = coef.K_bottom.empty() ? 0.0 : coef.K_bottom[col];
          const double td = kb * az * 2.0;  // half-cell distance
          d += td;
          b += td * *prob.bottom_dirichlet - kb * ah;
          out.td_bottom[col] = td;
          out.grav_bottom[col] = kb * ah;
        }
        if (k == n3 - 1 && !coef.top_flux.empty()) {
          const double q = coef.top_flux[col] * ah;
          b -= q;
          out.top_out[col] = q;
        }
        if (!coef.exch_coef.empty()) {
          d += coef.exch_coef[c];
          b += coef.exch_rhs[c];
        }
        out.diag[c] = d;
        out.b[c] = b;
      }
  return out;
}

}  // namespace

PhaseStepResult phase_step(const StructuredProblem& prob, const PhaseCoefficients& coef,
                           const std::vector<double>& theta0, const SolverSettings& s,
                           double tau, double ledger_target, std::vector<double>& h) {
  if (!(s.L_stab > 0.0)) throw ConfigError("phase_step: L_stab must be resolved (> 0)");
  const std::size_t n = prob.n();
  const auto& box = prob.box;
  Assembled A = assemble(prob, coef);

  auto apply_base = [&](const double* x, double* y) {
    kernels::apply_box_fv(box, A.diag, A.tx, A.ty, A.tz, {x, n}, {y, n});
  };

  std::vector<double> F(n), work(n), dh(n), combined(n);

  auto eval_residual = [&](const std::vector<double>& hv) {
    apply_base(hv.data(), F.data());
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < (long long)n; ++c) {
      if (!prob.is_active(c)) {
        F[c] = 0.0;
        continue;
      }
      F[c] += A.volume[c] / tau * (prob.theta(c, hv[c]) - theta0[c]) - A.b[c];
    }
  };

  PhaseStepResult out;
  StepStats& st = out.stats;
  st.tau = tau;

  const int max_lin =
      s.max_lin > 0 ? s.max_lin : std::max(1000, 40 * (box.n1 + box.n2 + box.n3));

  eval_residual(h);
  double f1 = kernels::sum_abs(F);
  double f2 = std::sqrt(kernels::dot(F, F));
  st.residual_initial = tau * f1;
  double f2_prev = f2;

  std::vector<double> h_trial(n);
  int it = 0;
  for (; it <= s.max_nl; ++it) {
    if (tau * f1 <= ledger_target) break;
    if (it == s.max_nl)
      throw SolverError("nonlinear step did not converge: tau*||F||_1 = " +
                            std::to_string(tau * f1) + " target " +
                            std::to_string(ledger_target),
                        tau * f1);

    // stabilized diagonal
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < (long long)n; ++c) {
      double cap = s.L_stab;
      if (s.nonlinear == NonlinearMethod::newton && prob.is_active(c))
        cap = std::max(prob.capacity(c, h[c]), 1e-6 * s.L_stab);
      combined[c] = A.diag[c] + (prob.is_active(c) ? A.volume[c] * cap / tau : 0.0);
    }

#pragma omp parallel for schedule(static)
    for (long long c = 0; c < (long long)n; ++c) work[c] = -F[c];

    if (prob.vertical_only) {
      thomas_vertical(box, combined, A.tz, work, dh);
    } else {
      auto apply_shifted = [&](const double* x, double* y) {
        kernels::apply_box_fv(box, combined, A.tx, A.ty, A.tz, {x, n}, {y, n});
      };
      kernels::fill(dh, 0.0);
      PcgResult lin = pcg(n, apply_shifted, combined.data(), work.data(), dh.data(),
                          s.tol_lin, max_lin, NoProject{});
      st.linear_iterations += lin.iterations;
      if (!lin.converged)
        throw SolverError("linear solve did not converge (rel residual " +
                              std::to_string(lin.rel_residual) + ")",
                          lin.rel_residual);
    }

    // Newton gets a backtracking safeguard; the L-scheme update is taken as is.
    double step_scale = 1.0;
    for (int bt = 0;; ++bt) {
#pragma omp parallel for schedule(static)
      for (long long c = 0; c < (long long)n; ++c) h_trial[c] = h[c] + step_scale * dh[c];
      eval_residual(h_trial);
      const double f2_new = std::sqrt(kernels::dot(F, F));
      if (s.nonlinear == NonlinearMethod::newton && f2_new > f2_prev && bt < 8) {
        step_scale *= 0.5;
        continue;
      }
      if (f2_new > f2_prev * (1.0 + 1e-9)) {
        st.residual_monotone = false;
        if (s.strict)
          throw SolverError("nonlinear residual increased in strict mode", f2_new);
      }
      f2_prev = f2_new;
      break;
    }
    std::swap(h, h_trial);
    f1 = kernels::sum_abs(F);
  }
  st.nonlinear_iterations = it;
  st.residual_final = tau * f1;

  // post-step diagnostics and ledger pieces
  std::vector<double> caps(n, 0.0);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < (long long)n; ++c)
    if (prob.is_active(c)) caps[c] = prob.capacity(c, h[c]);
  st.capacity_sup = kernels::max_val(caps);

  const int n1 = box.n1, n2 = box.n2, n3 = box.n3;
  const std::size_t stride = std::size_t(n1) * n2;
  std::vector<double> bnd(stride, 0.0);
  for (std::size_t col = 0; col < stride; ++col) {
    double in = -A.top_out[col];
    if (prob.bottom_dirichlet && A.td_bottom[col] > 0.0) {
      const double hc = h[col];  // k = 0 cell
      in -= A.td_bottom[col] * (hc - *prob.bottom_dirichlet) + A.grav_bottom[col];
    }
    bnd[col] = in;
  }
  out.boundary_in = tau * kernels::sum(bnd);

  if (!coef.exch_coef.empty()) {
    std::vector<double> ex(n, 0.0);
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < (long long)n; ++c)
      if (prob.is_active(c)) ex[c] = coef.exch_rhs[c] - coef.exch_coef[c] * h[c];
    out.exchange_in = tau * kernels::sum(ex);
  }
  (void)n3;
  return out;
}

}  // namespace rhizohom
