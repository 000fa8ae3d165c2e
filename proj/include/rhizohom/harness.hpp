#pragma once

#include <string>
#include <vector>

#include "rhizohom/compare.hpp"
#include "rhizohom/config.hpp"

namespace rhizohom {

// Exit codes: 0 success, 2 config error, 3 solver non-convergence,
// 4 property-suite failure, 5 comparison alignment error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitProps = 4;
inline constexpr int kExitAlignment = 5;

struct PropCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Constitutive invariants on 1e4-point grids: monotonicity, bounds, branch
// continuity, derivative consistency, Lipschitz witness, saturated-range
// constancy, retention primitive and runoff identities.
std::vector<PropCheck> constitutive_property_suite(const MediumSet& media);

// Short macro run checking per-step ledgers and exchange cancellation.
std::vector<PropCheck> conservation_property_suite(const RunConfig& cfg);

int run_mode_cell(const RunConfig& cfg, const std::string& outdir);
int run_mode_macro(const RunConfig& cfg, const std::string& outdir);
int run_mode_micro(const RunConfig& cfg, const std::string& outdir);
int run_mode_compare(const RunConfig& cfg, const std::string& outdir);
int run_mode_props(const RunConfig& cfg, const std::string& outdir, const std::string& what);

// Builds the convergence study in memory (used by compare mode and the
// acceptance suite).
ConvergenceReport convergence_study(const RunConfig& cfg, MicroDims dims,
                                    const std::vector<double>& eps_list,
                                    std::vector<double>* runtimes = nullptr);

}  // namespace rhizohom
