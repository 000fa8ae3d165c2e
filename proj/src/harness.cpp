#include "rhizohom/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rhizohom/csvio.hpp"

namespace rhizohom {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

fs::path prepare_outdir(const RunConfig& cfg, const std::string& outdir) {
  fs::path dir = outdir.empty() ? fs::path(cfg.outputs.dir) : fs::path(outdir);
  fs::create_directories(dir);
  write_text(dir / "config.normalized.json", emit_config_text(cfg));
  return dir;
}

void write_meta(const fs::path& dir, json meta) {
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

std::vector<double> head_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * double(i) / (n - 1);
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// property suites

std::vector<PropCheck> constitutive_property_suite(const MediumSet& media) {
  std::vector<PropCheck> out;
  auto check = [&](const std::string& name, bool ok, const std::string& detail = "") {
    out.push_back({name, ok, detail});
  };

  const auto grid = head_grid(-1e3, 10.0, 10000);

  // monotonicity: strictly increasing water content for each medium
  for (Medium m : {Medium::R, Medium::B, Medium::P}) {
    const char* nm = m == Medium::R ? "R" : (m == Medium::B ? "B" : "P");
    bool mono = true;
    double max_slope = 0;
    double prev = media.water_content(m, grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double cur = media.water_content(m, grid[i]);
      if (!(cur > prev)) mono = false;
      max_slope = std::max(max_slope, (cur - prev) / (grid[i] - grid[i - 1]));
      prev = cur;
    }
    check(std::string("monotonicity theta_") + nm, mono);
    check(std::string("lipschitz witness theta_") + nm, std::isfinite(max_slope),
          "max finite-difference slope " + format_sci(max_slope));
  }

  // bounds
  {
    bool ok = true;
    for (double h : grid) {
      const double tR = media.water_content(Medium::R, h);
      const double tB = media.water_content(Medium::B, h);
      const double tP = media.water_content(Medium::P, h);
      ok = ok && tR >= media.soil_R.theta_res && tR <= 1.0;
      ok = ok && tB >= media.soil_B.theta_res && tB <= 1.0;
      ok = ok && tP > 0.0 && tP <= 1.0;
    }
    check("water content bounds", ok);
  }
  {
    bool ok = true;
    for (double h : grid) {
      for (Medium m : {Medium::R, Medium::B}) {
        const auto& s = media.soil(m);
        const double K = s.conductivity(h);
        ok = ok && K >= s.K0() * (1 - 1e-12) && K <= s.K_sat;
      }
      const double kp = media.conductivity_root_scalar(h);
      ok = ok && kp > 0.0 && kp <= 1.0;
      ok = ok && std::abs(media.surface.flux(h)) <= media.surface.flux_bound() * (1 + 1e-12);
    }
    check("conductivity and flux bounds", ok);
  }

  // branch continuity at machine-representable abscissae, 1e-10 relative
  {
    auto cont = [&](auto&& f, double h0) {
      const double left = f(std::nextafter(h0, -1e30));
      const double right = f(h0);
      return rel_close(left, right, 1e-10);
    };
    bool ok = true;
    ok = ok && cont([&](double h) { return media.soil_R.theta(h); }, 0.0);
    ok = ok && cont([&](double h) { return media.soil_B.theta(h); }, 0.0);
    ok = ok && cont([&](double h) { return media.root.theta(h); }, 0.0);
    ok = ok && cont([&](double h) { return media.root.theta(h); }, media.root.h_ae);
    ok = ok && cont([&](double h) { return media.soil_R.theta_reg(h); }, 0.0);
    ok = ok && cont([&](double h) { return media.soil_B.theta_reg(h); }, 0.0);
    ok = ok && cont([&](double h) { return media.root.theta_reg(h); }, media.root.h_ae);
    ok = ok && cont([&](double h) { return media.soil_R.conductivity(h); }, 0.0);
    ok = ok && cont([&](double h) { return media.soil_B.conductivity(h); }, 0.0);
    ok = ok && cont([&](double h) { return media.root.kappa(h); }, 0.0);
    ok = ok && cont([&](double h) { return media.root.kappa(h); }, media.root.h_ae);
    check("branch continuity", ok);
  }

  // derivative vs central finite differences away from branch points
  {
    const double step = 1e-6;
    bool ok = true;
    double worst = 0;
    for (double h : head_grid(-50.0, 8.0, 2000)) {
      if (std::abs(h) < 10 * step) continue;
      if (std::abs(h - media.root.h_ae) < 10 * step) continue;
      for (Medium m : {Medium::R, Medium::B, Medium::P}) {
        const double fd = (media.water_content(m, h + step) - media.water_content(m, h - step)) /
                          (2 * step);
        const double an = media.water_capacity(m, h);
        const double err = std::abs(fd - an) / std::max({std::abs(an), std::abs(fd), 1e-30});
        if (an > 1e-14 || fd > 1e-14) {
          worst = std::max(worst, err);
          ok = ok && err <= 1e-6;
        }
      }
    }
    check("capacity matches finite differences", ok, "worst rel err " + format_sci(worst));
  }
  {
    bool ok = true;
    for (double h : head_grid(-1e3, 10, 10000))
      ok = ok && media.water_capacity(Medium::R, h) >= 0 &&
           media.water_capacity(Medium::B, h) >= 0 && media.water_capacity(Medium::P, h) >= 0;
    check("capacity non-negative", ok);
  }

  // saturated-range constancy (the non-positivity hypothesis)
  {
    bool ok = true;
    const double kR0 = media.soil_R.conductivity(0.0);
    const double kB0 = media.soil_B.conductivity(0.0);
    for (double h : {0.0, 1e-3, 0.1, 5.0, 500.0, 1e6}) {
      ok = ok && media.soil_R.conductivity(h) == kR0;
      ok = ok && media.soil_B.conductivity(h) == kB0;
      ok = ok && media.conductivity_root_scalar(h) == 1.0;
    }
    check("conductivity constant on h >= 0", ok);
  }

  // retention primitive
  {
    bool ok = true;
    for (Medium m : {Medium::R, Medium::B, Medium::P}) {
      ok = ok && media.retention_primitive(m, 0.0) == 0.0;
      for (double h : head_grid(-40, 5, 181)) ok = ok && media.retention_primitive(m, h) >= 0.0;
    }
    check("retention primitive non-negative, zero at zero", ok);
  }

  // runoff identities
  {
    const auto& sf = media.surface;
    bool ok = rel_close(sf.runoff(0.0), sf.P, 1e-12) || sf.P == 0.0;
    ok = ok && sf.runoff(-1e3) <= 1e-30 + sf.P * 1e-12;
    const double lim = sf.P / (1.0 - std::exp(-std::sqrt(sf.C_RO)));
    ok = ok && rel_close(sf.runoff(1e3), lim, 1e-9);
    bool mono = true;
    double prev = sf.runoff(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double cur = sf.runoff(grid[i]);
      if (cur < prev - 1e-30) mono = false;
      prev = cur;
    }
    bool fmono = true;
    prev = sf.flux(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double cur = sf.flux(grid[i]);
      if (cur < prev - 1e-30) fmono = false;
      prev = cur;
    }
    check("runoff identities and monotone surface flux", ok && mono && fmono);
  }
  return out;
}

std::vector<PropCheck> conservation_property_suite(const RunConfig& cfg) {
  std::vector<PropCheck> out;
  RunConfig c = cfg;
  c.macro.n1 = c.macro.n2 = 1;
  c.macro.column_mode = true;
  c.macro.n3 = std::min(c.macro.n3, 24);
  MacroConfig mc = make_macro_config(c, nullptr);
  MacroSolver solver(mc, c.media, nullptr);
  MacroState state = solver.initial_state();

  double worst_ledger = 0, worst_antisym = 0;
  bool ok = true;
  try {
    for (int i = 0; i < 10; ++i) {
      MacroStepReport rep = solver.step(state, c.solver, c.solver.tau);
      worst_ledger = std::max({worst_ledger, rep.ledger_soil.rel_residual(),
                               rep.ledger_root.rel_residual(), rep.ledger_total.rel_residual()});
      worst_antisym = std::max(worst_antisym, rep.exchange_antisym_rel);
    }
  } catch (const SolverError& e) {
    ok = false;
    out.push_back({"conservation run", false, e.what()});
  }
  if (ok) {
    out.push_back({"mass ledger residual <= 1e-10", worst_ledger <= 1e-10,
                   "worst " + format_sci(worst_ledger)});
    out.push_back({"exchange ledgers cancel <= 1e-12", worst_antisym <= 1e-12,
                   "worst " + format_sci(worst_antisym)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// cell mode

int run_mode_cell(const RunConfig& cfg, const std::string& outdir) {
  fs::path dir = prepare_outdir(cfg, outdir);
  const double t0 = now_seconds();
  EffectiveTable table = build_effective_table(
      cfg.cell.geom, log_rho_grid(cfg.cell.rho_min, cfg.cell.rho_max, cfg.cell.rho_count));

  {
    CsvWriter csv((dir / "ahat_table.csv").string(), {"rho", "a11", "a12", "a22"});
    for (std::size_t i = 0; i < table.rho.size(); ++i)
      csv.row() << table.rho[i] << table.ahat[i].a11 << table.ahat[i].a12
                << table.ahat[i].a22;
  }

  // provenance: residuals and bounds checks per tabulated rho
  double max_res = 0, max_asym = 0;
  bool bounds_ok = true;
  for (std::size_t i = 0; i < table.rho.size(); ++i) {
    max_res = std::max(max_res, table.residuals[i]);
    const auto eig = table.ahat[i].eigenvalues();
    const double lo = reuss_bound(table, table.rho[i]);
    const double hi = voigt_bound(table, table.rho[i]);
    bounds_ok = bounds_ok && eig[0] >= lo - 1e-9 && eig[1] <= hi + 1e-9;
  }
  json prov;
  prov["grid_N"] = table.N;
  prov["mode"] = table.mode == CellMode::disk ? "disk" : "laminate";
  prov["r_P"] = table.r_P;
  prov["r_R"] = table.r_R;
  prov["fractions_counted"] = {table.frac_P, table.frac_R, table.frac_B};
  prov["perimeter_counted"] = table.perimeter;
  prov["max_linear_residual"] = max_res;
  prov["max_asymmetry"] = max_asym;
  prov["reuss_voigt_ok"] = bounds_ok;
  prov["rho_grid"] = table.rho;
  write_text(dir / "cell_provenance.json", prov.dump(2) + "\n");

  json meta;
  meta["mode"] = "cell";
  meta["runtime_s"] = now_seconds() - t0;
  write_meta(dir, meta);
  return bounds_ok ? kExitOk : kExitProps;
}

// ---------------------------------------------------------------------------
// macro mode

namespace {

std::vector<double> default_snapshots(const RunConfig& cfg) {
  if (!cfg.schedule.snapshot_times.empty()) return cfg.schedule.snapshot_times;
  return {0.0, cfg.schedule.duration};
}

struct TauTracker {
  std::vector<double> taus;
  void add(double t) {
    if (taus.empty() || taus.back() != t) taus.push_back(t);
  }
};

}  // namespace

int run_mode_macro(const RunConfig& cfg, const std::string& outdir) {
  fs::path dir = prepare_outdir(cfg, outdir);
  const double t0 = now_seconds();

  std::optional<EffectiveTable> table;
  if (cfg.macro.n1 > 1 || cfg.macro.n2 > 1)
    table = build_effective_table(
        cfg.cell.geom, log_rho_grid(cfg.cell.rho_min, cfg.cell.rho_max, cfg.cell.rho_count));

  MacroConfig mc = make_macro_config(cfg, table ? &*table : nullptr);
  MacroSolver solver(mc, cfg.media, table ? &*table : nullptr);
  MacroState state = solver.initial_state();

  CsvWriter snaps((dir / "macro_snapshots.csv").string(),
                  {"t", "x1", "x2", "x3", "h_S", "h_P", "theta_star", "theta_P"});
  CsvWriter diag((dir / "macro_diag.csv").string(),
                 {"step", "t", "tau", "nl_soil", "nl_root", "lin_soil", "lin_root",
                  "resid_soil", "resid_root", "mass_rel_soil", "mass_rel_root",
                  "mass_rel_total", "exch_antisym_rel", "cap_sup_soil", "cap_sup_root",
                  "monotone_soil", "monotone_root"});
  CsvWriter energy((dir / "macro_energy.csv").string(), {"t", "Theta_S", "Theta_P"});

  long long step_count = 0;
  TauTracker taus;
  RunCallbacks cb;
  cb.on_step = [&](const MacroState& st, const MacroStepReport& rep) {
    ++step_count;
    taus.add(rep.soil.tau);
    diag.row() << step_count << st.t << rep.soil.tau << rep.soil.nonlinear_iterations
               << rep.root.nonlinear_iterations << rep.soil.linear_iterations
               << rep.root.linear_iterations << rep.soil.residual_final
               << rep.root.residual_final << rep.ledger_soil.rel_residual()
               << rep.ledger_root.rel_residual() << rep.ledger_total.rel_residual()
               << rep.exchange_antisym_rel << rep.soil.capacity_sup << rep.root.capacity_sup
               << int(rep.soil.residual_monotone) << int(rep.root.residual_monotone);
  };
  cb.on_snapshot = [&](const MacroState& st) {
    const auto& box = solver.box();
    for (int k = 0; k < box.n3; ++k) {
      const double x3 = -mc.L3 + (k + 0.5) * solver.dz();
      for (int j = 0; j < box.n2; ++j)
        for (int i = 0; i < box.n1; ++i) {
          const std::size_t c = box.idx(i, j, k);
          const double x1 = (i + 0.5) * mc.L1 / box.n1;
          const double x2 = (j + 0.5) * mc.L2 / box.n2;
          snaps.row() << st.t << x1 << x2 << x3 << st.h_S[c] << st.h_P[c]
                      << solver.theta_star(st.h_S[c]) << cfg.media.root.theta(st.h_P[c]);
        }
    }
    energy.row() << st.t << solver.energy_soil(st) << solver.energy_root(st);
  };

  try {
    run_macro(solver, state, cfg.schedule.duration, default_snapshots(cfg), cfg.solver, cb);
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }

  if (cfg.outputs.plots) {
    fs::create_directories(dir / "plots");
    write_text(dir / "plots" / "profiles.gp",
               "set datafile separator ','\n"
               "set key autotitle columnhead\n"
               "set xlabel 'h (m)'\nset ylabel 'x3 (m)'\n"
               "plot 'macro_snapshots.csv' using 5:4 with lines title 'h_S', \\\n"
               "     'macro_snapshots.csv' using 6:4 with lines title 'h_P'\n");
  }

  json meta;
  meta["mode"] = "macro";
  meta["scheme"] = cfg.solver.scheme == Scheme::rothe ? "rothe" : "fully_implicit";
  meta["steps"] = step_count;
  meta["tau_history"] = taus.taus;
  meta["tol_nl"] = cfg.solver.tol_nl;
  meta["tol_lin"] = cfg.solver.tol_lin;
  meta["weights"] = {{"theta_P", mc.w.theta_P}, {"theta_R", mc.w.theta_R},
                     {"theta_B", mc.w.theta_B}, {"gamma", mc.w.gamma},
                     {"gamma_P", mc.w.gamma_P}};
  meta["runtime_s"] = now_seconds() - t0;
  write_meta(dir, meta);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// micro mode

int run_mode_micro(const RunConfig& cfg, const std::string& outdir) {
  fs::path dir = prepare_outdir(cfg, outdir);
  const double t0 = now_seconds();

  MicroGeometry geom = build_micro(make_micro_params(cfg, cfg.micro.eps, cfg.micro.dims));
  MicroSolver solver(geom, cfg.media, cfg.macro.a, cfg.macro.init);
  MicroState state = solver.initial_state();

  CsvWriter snaps((dir / "micro_snapshots.csv").string(),
                  {"t", "x1", "x2", "x3", "label", "h_S", "h_P"});
  CsvWriter avg((dir / "micro_avg.csv").string(), {"t", "x3", "hbar_S", "hbar_P"});
  CsvWriter diag((dir / "micro_diag.csv").string(),
                 {"step", "t", "tau", "nl_soil", "nl_root", "lin_soil", "lin_root",
                  "resid_soil", "resid_root", "mass_rel_soil", "mass_rel_root",
                  "mass_rel_total", "exch_antisym_rel"});
  CsvWriter energy((dir / "micro_energy.csv").string(), {"t", "Theta_S", "Theta_P"});

  const int stride = cfg.outputs.snapshot_stride;
  long long step_count = 0;
  TauTracker taus;
  MicroRunCallbacks cb;
  cb.on_step = [&](const MicroState& st, const MicroStepReport& rep) {
    ++step_count;
    taus.add(rep.soil.tau);
    diag.row() << step_count << st.t << rep.soil.tau << rep.soil.nonlinear_iterations
               << rep.root.nonlinear_iterations << rep.soil.linear_iterations
               << rep.root.linear_iterations << rep.soil.residual_final
               << rep.root.residual_final << rep.ledger_soil.rel_residual()
               << rep.ledger_root.rel_residual() << rep.ledger_total.rel_residual()
               << rep.exchange_antisym_rel;
  };
  cb.on_snapshot = [&](const MicroState& st) {
    const auto& box = geom.box;
    for (int k = 0; k < box.n3; k += stride) {
      const double x3 = -geom.L3 + (k + 0.5) * geom.dz;
      for (int j = 0; j < box.n2; j += stride)
        for (int i = 0; i < box.n1; i += stride) {
          const std::size_t c = box.idx(i, j, k);
          const std::size_t col = c % geom.ncol();
          const char* lab = geom.label2d[col] == kLabelP ? "P"
                            : geom.label2d[col] == kLabelR ? "R"
                                                           : "B";
          snaps.row() << st.t << (i + 0.5) * geom.dx << (j + 0.5) * geom.dy << x3
                      << std::string(lab) << st.h_S[c] << st.h_P[c];
        }
    }
    kernels::Box3 avg_box{1, 1, box.n3};
    std::vector<double> hs, hp;
    solver.average_to_macro(st, avg_box, hs, hp);
    for (int k = 0; k < box.n3; ++k) {
      const double x3 = -geom.L3 + (k + 0.5) * geom.dz;
      avg.row() << st.t << x3 << hs[k] << hp[k];
    }
    energy.row() << st.t << solver.energy_soil(st) << solver.energy_root(st);
  };

  try {
    run_micro(solver, state, cfg.schedule.duration, default_snapshots(cfg), cfg.solver, cb);
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }

  json meta;
  meta["mode"] = "micro";
  meta["dims"] = geom.dims == MicroDims::d3 ? "3d" : "strip";
  meta["eps"] = geom.eps;
  meta["pattern_hash"] = geom.pattern_hash();
  meta["steps"] = step_count;
  meta["tau_history"] = taus.taus;
  meta["weights"] = {{"theta_P", geom.frac_P}, {"theta_R", geom.frac_R},
                     {"theta_B", geom.frac_B}, {"gamma", geom.perimeter}};
  meta["runtime_s"] = now_seconds() - t0;
  write_meta(dir, meta);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// compare mode

ConvergenceReport convergence_study(const RunConfig& cfg, MicroDims dims,
                                    const std::vector<double>& eps_list,
                                    std::vector<double>* runtimes) {
  if (eps_list.empty()) throw ConfigError("compare: eps_list is empty");
  std::vector<double> snaps = cfg.schedule.snapshot_times;
  if (snaps.empty()) throw AlignmentError("compare: snapshot_times must be set");

  // shared counted weights from the finest pattern (identical across eps)
  MicroGeometry geom0 = build_micro(make_micro_params(cfg, eps_list.front(), dims));

  const int n3 = cfg.compare.macro_n3 > 0 ? cfg.compare.macro_n3 : cfg.micro.n3;
  if (n3 != cfg.micro.n3)
    throw AlignmentError("compare: macro_n3 must match micro n3 for aligned averaging");

  RunConfig mcfg = cfg;
  mcfg.macro.n1 = mcfg.macro.n2 = 1;
  mcfg.macro.column_mode = true;
  mcfg.macro.n3 = n3;
  MacroConfig mc = make_macro_config(mcfg, nullptr);
  mc.w = geom0.weights();

  MacroSolver macro(mc, cfg.media, nullptr);
  MacroState mstate = macro.initial_state();
  std::vector<std::pair<double, MacroState>> macro_snaps;
  RunCallbacks mcb;
  mcb.on_snapshot = [&](const MacroState& st) { macro_snaps.emplace_back(st.t, st); };
  run_macro(macro, mstate, cfg.schedule.duration, snaps, cfg.solver, mcb);

  ConvergenceReport report;
  report.eps_list = eps_list;
  const kernels::Box3 avg_box{1, 1, n3};
  const double cell_vol = (mc.L1 * mc.L2 * mc.L3) / double(n3);

  for (double eps : eps_list) {
    const double t_eps0 = now_seconds();
    MicroGeometry geom = build_micro(make_micro_params(cfg, eps, dims));
    if (geom.pattern_hash() != geom0.pattern_hash() &&
        (geom.frac_P != geom0.frac_P || geom.perimeter != geom0.perimeter))
      throw AlignmentError("compare: unit-cell pattern differs across eps");
    MicroSolver solver(geom, cfg.media, cfg.macro.a, cfg.macro.init);
    MicroState state = solver.initial_state();

    std::vector<std::pair<double, std::pair<std::vector<double>, std::vector<double>>>>
        micro_avgs;
    MicroRunCallbacks cb;
    cb.on_snapshot = [&](const MicroState& st) {
      std::vector<double> hs, hp;
      solver.average_to_macro(st, avg_box, hs, hp);
      micro_avgs.emplace_back(st.t, std::make_pair(std::move(hs), std::move(hp)));
    };
    run_micro(solver, state, cfg.schedule.duration, snaps, cfg.solver, cb);

    if (micro_avgs.size() != macro_snaps.size())
      throw AlignmentError("compare: snapshot counts differ between micro and macro");
    for (std::size_t s = 0; s < micro_avgs.size(); ++s) {
      if (!rel_close(micro_avgs[s].first, macro_snaps[s].first, 1e-9))
        throw AlignmentError("compare: snapshot times differ between micro and macro");
      ErrorRow row;
      row.eps = eps;
      row.t = micro_avgs[s].first;
      row.h_S = diff_norms(micro_avgs[s].second.first, macro_snaps[s].second.h_S, cell_vol);
      row.h_P = diff_norms(micro_avgs[s].second.second, macro_snaps[s].second.h_P, cell_vol);
      row.runtime_s = 0;
      report.rows.push_back(row);
    }
    if (runtimes) runtimes->push_back(now_seconds() - t_eps0);
  }
  report.compute_verdict();
  return report;
}

int run_mode_compare(const RunConfig& cfg, const std::string& outdir) {
  fs::path dir = prepare_outdir(cfg, outdir);
  const double t0 = now_seconds();

  std::vector<double> runtimes;
  ConvergenceReport report;
  try {
    report = convergence_study(cfg, cfg.compare.dims, cfg.compare.eps_list, &runtimes);
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }

  {
    CsvWriter csv((dir / "convergence_report.csv").string(),
                  {"eps", "t", "l2_hS", "linf_hS", "l2_hP", "linf_hP"});
    for (const auto& r : report.rows)
      csv.row() << r.eps << r.t << r.h_S.l2 << r.h_S.linf << r.h_P.l2 << r.h_P.linf;
  }

  json meta;
  meta["mode"] = "compare";
  meta["dims"] = cfg.compare.dims == MicroDims::d3 ? "3d" : "strip";
  meta["eps_list"] = report.eps_list;
  meta["monotone_verdict"] = report.monotone;
  meta["per_eps_runtime_s"] = runtimes;  // runtimes live in metadata only
  meta["runtime_s"] = now_seconds() - t0;
  write_meta(dir, meta);

  std::cout << "convergence verdict: " << (report.monotone ? "monotone" : "NOT monotone")
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// props mode

int run_mode_props(const RunConfig& cfg, const std::string& outdir, const std::string& what) {
  fs::path dir = prepare_outdir(cfg, outdir);

  if (what == "constitutive" || what == "all") {
    CsvWriter csv((dir / "props_constitutive.csv").string(),
                  {"h", "theta_R", "theta_B", "theta_P", "K_R", "K_B", "kappa_P", "f", "RO"});
    for (double h : head_grid(-100.0, 10.0, 2201))
      csv.row() << h << cfg.media.soil_R.theta(h) << cfg.media.soil_B.theta(h)
                << cfg.media.root.theta(h) << cfg.media.soil_R.conductivity(h)
                << cfg.media.soil_B.conductivity(h) << cfg.media.root.kappa(h)
                << cfg.media.surface.flux(h) << cfg.media.surface.runoff(h);
  }

  std::vector<PropCheck> checks = constitutive_property_suite(cfg.media);
  if (what == "all" || what == "conservation") {
    auto cons = conservation_property_suite(cfg);
    checks.insert(checks.end(), cons.begin(), cons.end());
  }

  bool all_ok = true;
  for (const auto& c : checks) {
    all_ok = all_ok && c.pass;
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name
              << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
  }
  json meta;
  meta["mode"] = "props";
  meta["checks_total"] = checks.size();
  meta["checks_passed"] =
      std::count_if(checks.begin(), checks.end(), [](const PropCheck& c) { return c.pass; });
  write_meta(dir, meta);
  return all_ok ? kExitOk : kExitProps;
}

}  // namespace rhizohom
