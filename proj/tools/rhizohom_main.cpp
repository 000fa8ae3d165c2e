#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rhizohom/harness.hpp"
#include "rhizohom/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace rhizohom;

namespace {

void apply_thread_cap() {
#ifdef _OPENMP
  omp_set_max_active_levels(1);
#endif
  if (const char* env = std::getenv("RHIZOHOM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) kernels::set_thread_cap(cap);
  }
}

int dispatch(const std::string& mode, const std::string& config_path,
             const std::string& outdir, bool strict, const std::string& what) {
  RunConfig cfg = load_config(config_path);
  if (strict) cfg.solver.strict = true;
  if (mode == "cell") return run_mode_cell(cfg, outdir);
  if (mode == "macro") return run_mode_macro(cfg, outdir);
  if (mode == "micro") return run_mode_micro(cfg, outdir);
  if (mode == "compare") return run_mode_compare(cfg, outdir);
  if (mode == "props") return run_mode_props(cfg, outdir, what);
  std::cerr << "unknown mode " << mode << "\n";
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"rhizohom: multiscale water transport in vegetated soil"};
  app.require_subcommand(1);

  std::string config_path, outdir, props_what = "all";
  bool strict = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", outdir, "output directory (default: outputs.dir)");
    sub->add_flag("--strict", strict, "fail on nonlinear residual monotonicity violations");
  };

  add_common(app.add_subcommand("cell", "tabulate the homogenized cell tensor"));
  add_common(app.add_subcommand("macro", "run the homogenized dual-porosity model"));
  add_common(app.add_subcommand("micro", "run the eps-resolved microscopic model"));
  add_common(app.add_subcommand("compare", "micro-vs-macro convergence study"));
  auto* props = app.add_subcommand("props", "run the property suites");
  add_common(props);
  props->add_option("what", props_what, "all | constitutive | conservation");

  CLI11_PARSE(app, argc, argv);
  const std::string mode = app.get_subcommands().front()->get_name();

  try {
    return dispatch(mode, config_path, outdir, strict, props_what);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TableRangeError& e) {
    std::cerr << "table range error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const AlignmentError& e) {
    std::cerr << "alignment error: " << e.what() << "\n";
    return kExitAlignment;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
