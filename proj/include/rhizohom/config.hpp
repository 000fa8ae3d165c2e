#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rhizohom/cell.hpp"
#include "rhizohom/constitutive.hpp"
#include "rhizohom/macro.hpp"
#include "rhizohom/micro.hpp"
#include "rhizohom/solvercore.hpp"

namespace rhizohom {

enum class WeightSource { analytic, counted };

struct CellSection {
  UnitCellGeometry geom;
  double rho_min = 1e-3, rho_max = 1e3;
  int rho_count = 49;
};

struct MacroSection {
  double L1 = 1, L2 = 1, L3 = 1;
  int n1 = 1, n2 = 1, n3 = 32;
  bool column_mode = true;
  double a = -0.5;
  WeightSource weights = WeightSource::counted;
  InitialCondition init;
};

struct MicroSection {
  MicroDims dims = MicroDims::d3;
  double eps = 0.25;
  int cells_per_eps = 20;
  int n3 = 16;
};

struct ScheduleSection {
  double duration = 600.0;
  std::vector<double> snapshot_times;
};

struct OutputSection {
  std::string dir = "out";
  int snapshot_stride = 1;  // micro snapshot cell stride
  bool plots = false;
};

struct CompareSection {
  std::vector<double> eps_list = {0.25, 0.125};
  MicroDims dims = MicroDims::strip;
  int macro_n3 = 0;  // 0: reuse macro.n3
};

// Full experiment description; round-trips bit-exactly through the
// normalized JSON form, with unknown keys rejected.
struct RunConfig {
  int version = 1;
  std::string scenario = "default";
  MediumSet media;
  CellSection cell;
  MacroSection macro;
  MicroSection micro;
  SolverSettings solver;
  ScheduleSection schedule;
  OutputSection outputs;
  CompareSection compare;

  void validate() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json emit_config(const RunConfig& cfg);  // normalized document
std::string emit_config_text(const RunConfig& cfg);

MacroConfig make_macro_config(const RunConfig& cfg, const EffectiveTable* table);
MicroBuildParams make_micro_params(const RunConfig& cfg, double eps, MicroDims dims);

}  // namespace rhizohom
