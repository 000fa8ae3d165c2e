#include "rhizohom/config.hpp"

#include <fstream>
#include <set>

namespace rhizohom {

namespace {

using nlohmann::json;

// Tracks which keys were consumed so leftovers can be rejected with a path
// diagnostic.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: expected an object at " + path_);
  }

  bool has(const char* key) const { return j_.contains(key); }

  double num(const char* key, double dflt) {
    if (!j_.contains(key)) return dflt;
    mark(key);
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError("config: " + at(key) + " must be a number");
    return v.get<double>();
  }

  int integer(const char* key, int dflt) {
    if (!j_.contains(key)) return dflt;
    mark(key);
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError("config: " + at(key) + " must be an integer");
    return v.get<int>();
  }

  bool boolean(const char* key, bool dflt) {
    if (!j_.contains(key)) return dflt;
    mark(key);
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError("config: " + at(key) + " must be a boolean");
    return v.get<bool>();
  }

  std::string text(const char* key, const std::string& dflt) {
    if (!j_.contains(key)) return dflt;
    mark(key);
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError("config: " + at(key) + " must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key, std::vector<double> dflt) {
    if (!j_.contains(key)) return dflt;
    mark(key);
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError("config: " + at(key) + " must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError("config: " + at(key) + " must hold numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  json object(const char* key) {
    mark(key);
    return j_.contains(key) ? j_.at(key) : json::object();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!consumed_.count(it.key()))
        throw ConfigError("config: unknown key " + at(it.key().c_str()));
  }

 private:
  std::string at(const char* key) const { return path_ + "." + key; }
  void mark(const char* key) { consumed_.insert(key); }
  const json& j_;
  std::string path_;
  std::set<std::string> consumed_;
};

SoilHydraulics parse_soil(const json& j, const std::string& path, SoilHydraulics d) {
  Reader r(j, path);
  d.theta_res = r.num("theta_res", d.theta_res);
  d.theta_sat = r.num("theta_sat", d.theta_sat);
  d.alpha = r.num("alpha", d.alpha);
  d.n = r.num("n", d.n);
  d.K_sat = r.num("K_sat", d.K_sat);
  d.l = r.num("l", d.l);
  d.delta = r.num("delta", d.delta);
  r.finish();
  return d;
}

RootHydraulics parse_root(const json& j, const std::string& path, RootHydraulics d) {
  Reader r(j, path);
  d.theta_sat = r.num("theta_sat", d.theta_sat);
  d.h_ae = r.num("h_ae", d.h_ae);
  d.E = r.num("E", d.E);
  d.lambda_P = r.num("lambda_P", d.lambda_P);
  d.alpha = r.num("alpha", d.alpha);
  d.n = r.num("n", d.n);
  d.delta = r.num("delta", d.delta);
  d.k_r = r.num("k_r", d.k_r);
  d.k_ax = r.num("k_ax", d.k_ax);
  d.r = r.num("r", d.r);
  d.rho_g = r.num("rho_g", d.rho_g);
  r.finish();
  return d;
}

SurfaceForcing parse_surface(const json& j, const std::string& path, SurfaceForcing d) {
  Reader r(j, path);
  d.ET_o = r.num("ET_o", d.ET_o);
  d.P = r.num("P", d.P);
  d.C_RO = r.num("C_RO", d.C_RO);
  d.K_cb = r.num("K_cb", d.K_cb);
  d.Ke_max = r.num("Ke_max", d.Ke_max);
  d.Ke_scale = r.num("Ke_scale", d.Ke_scale);
  r.finish();
  return d;
}

InitialCondition parse_initial(const json& j, const std::string& path) {
  Reader r(j, path);
  InitialCondition init;
  const std::string kind = r.text("kind", "hydrostatic");
  if (kind == "hydrostatic") init.kind = InitialCondition::Kind::hydrostatic;
  else if (kind == "uniform") init.kind = InitialCondition::Kind::uniform;
  else throw ConfigError("config: " + path + ".kind must be hydrostatic or uniform");
  init.offset_S = r.num("offset_S", 0.0);
  init.offset_P = r.num("offset_P", 0.0);
  init.uniform_S = r.num("uniform_S", -1.0);
  init.uniform_P = r.num("uniform_P", -1.0);
  r.finish();
  return init;
}

MicroDims parse_dims(const std::string& s, const std::string& path) {
  if (s == "3d") return MicroDims::d3;
  if (s == "strip") return MicroDims::strip;
  throw ConfigError("config: " + path + " must be 3d or strip");
}

}  // namespace

void RunConfig::validate() const {
  media.validate();
  cell.geom.validate();
  if (!(cell.rho_min > 0 && cell.rho_max > cell.rho_min && cell.rho_count >= 2))
    throw ConfigError("config: invalid cell rho grid");
  if (schedule.duration < 0) throw ConfigError("config: schedule.duration must be >= 0");
  if (!(solver.tau > 0)) throw ConfigError("config: solver.tau must be positive");
  if (outputs.snapshot_stride < 1)
    throw ConfigError("config: outputs.snapshot_stride must be >= 1");
  for (double e : compare.eps_list)
    if (!(e > 0)) throw ConfigError("config: compare.eps_list entries must be positive");
}

RunConfig parse_config(const nlohmann::json& doc) {
  RunConfig cfg;
  Reader top(doc, "$");
  cfg.version = top.integer("version", 1);
  if (cfg.version != 1) throw ConfigError("config: unsupported version");
  cfg.scenario = top.text("scenario", cfg.scenario);

  cfg.media.soil_R = parse_soil(top.object("soil_R"), "$.soil_R", cfg.media.soil_R);
  cfg.media.soil_B = parse_soil(top.object("soil_B"), "$.soil_B", cfg.media.soil_B);
  cfg.media.root = parse_root(top.object("root"), "$.root", cfg.media.root);
  cfg.media.surface = parse_surface(top.object("surface"), "$.surface", cfg.media.surface);

  {
    Reader r(top.object("cell"), "$.cell");
    cfg.cell.geom.r_P = r.num("r_P", cfg.cell.geom.r_P);
    cfg.cell.geom.r_R = r.num("r_R", cfg.cell.geom.r_R);
    cfg.cell.geom.N = r.integer("N", cfg.cell.geom.N);
    const std::string mode = r.text("mode", "disk");
    if (mode == "disk") cfg.cell.geom.mode = CellMode::disk;
    else if (mode == "laminate") cfg.cell.geom.mode = CellMode::laminate;
    else throw ConfigError("config: $.cell.mode must be disk or laminate");
    cfg.cell.rho_min = r.num("rho_min", cfg.cell.rho_min);
    cfg.cell.rho_max = r.num("rho_max", cfg.cell.rho_max);
    cfg.cell.rho_count = r.integer("rho_count", cfg.cell.rho_count);
    r.finish();
  }
  {
    Reader r(top.object("macro"), "$.macro");
    cfg.macro.L1 = r.num("L1", cfg.macro.L1);
    cfg.macro.L2 = r.num("L2", cfg.macro.L2);
    cfg.macro.L3 = r.num("L3", cfg.macro.L3);
    cfg.macro.n1 = r.integer("n1", cfg.macro.n1);
    cfg.macro.n2 = r.integer("n2", cfg.macro.n2);
    cfg.macro.n3 = r.integer("n3", cfg.macro.n3);
    cfg.macro.column_mode = r.boolean("column_mode", cfg.macro.column_mode);
    cfg.macro.a = r.num("a", cfg.macro.a);
    const std::string w = r.text("weights", "counted");
    if (w == "analytic") cfg.macro.weights = WeightSource::analytic;
    else if (w == "counted") cfg.macro.weights = WeightSource::counted;
    else throw ConfigError("config: $.macro.weights must be analytic or counted");
    cfg.macro.init = parse_initial(r.object("initial"), "$.macro.initial");
    r.finish();
  }
  {
    Reader r(top.object("micro"), "$.micro");
    cfg.micro.dims = parse_dims(r.text("dims", "3d"), "$.micro.dims");
    cfg.micro.eps = r.num("eps", cfg.micro.eps);
    cfg.micro.cells_per_eps = r.integer("cells_per_eps", cfg.micro.cells_per_eps);
    cfg.micro.n3 = r.integer("n3", cfg.micro.n3);
    r.finish();
  }
  {
    Reader r(top.object("solver"), "$.solver");
    cfg.solver.tau = r.num("tau", cfg.solver.tau);
    const std::string scheme = r.text("scheme", "rothe");
    if (scheme == "rothe") cfg.solver.scheme = Scheme::rothe;
    else if (scheme == "fully_implicit") cfg.solver.scheme = Scheme::fully_implicit;
    else throw ConfigError("config: $.solver.scheme must be rothe or fully_implicit");
    const std::string nl = r.text("nonlinear", "l_scheme");
    if (nl == "l_scheme") cfg.solver.nonlinear = NonlinearMethod::l_scheme;
    else if (nl == "newton") cfg.solver.nonlinear = NonlinearMethod::newton;
    else throw ConfigError("config: $.solver.nonlinear must be l_scheme or newton");
    cfg.solver.L_stab = r.num("L_stab", cfg.solver.L_stab);
    cfg.solver.tol_nl = r.num("tol_nl", cfg.solver.tol_nl);
    cfg.solver.max_nl = r.integer("max_nl", cfg.solver.max_nl);
    cfg.solver.tol_lin = r.num("tol_lin", cfg.solver.tol_lin);
    cfg.solver.max_lin = r.integer("max_lin", cfg.solver.max_lin);
    cfg.solver.adaptive_tau = r.boolean("adaptive_tau", cfg.solver.adaptive_tau);
    cfg.solver.tau_max = r.num("tau_max", cfg.solver.tau_max);
    cfg.solver.max_halvings = r.integer("max_halvings", cfg.solver.max_halvings);
    cfg.solver.strict = r.boolean("strict", cfg.solver.strict);
    r.finish();
  }
  {
    Reader r(top.object("schedule"), "$.schedule");
    cfg.schedule.duration = r.num("duration", cfg.schedule.duration);
    cfg.schedule.snapshot_times = r.numbers("snapshot_times", cfg.schedule.snapshot_times);
    r.finish();
  }
  {
    Reader r(top.object("outputs"), "$.outputs");
    cfg.outputs.dir = r.text("dir", cfg.outputs.dir);
    cfg.outputs.snapshot_stride = r.integer("snapshot_stride", cfg.outputs.snapshot_stride);
    cfg.outputs.plots = r.boolean("plots", cfg.outputs.plots);
    r.finish();
  }
  {
    Reader r(top.object("compare"), "$.compare");
    cfg.compare.eps_list = r.numbers("eps_list", cfg.compare.eps_list);
    cfg.compare.dims = parse_dims(r.text("dims", "strip"), "$.compare.dims");
    cfg.compare.macro_n3 = r.integer("macro_n3", cfg.compare.macro_n3);
    r.finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_config(doc);
}

nlohmann::json emit_config(const RunConfig& cfg) {
  nlohmann::json j;
  j["version"] = cfg.version;
  j["scenario"] = cfg.scenario;
  auto soil = [](const SoilHydraulics& s) {
    return nlohmann::json{{"theta_res", s.theta_res}, {"theta_sat", s.theta_sat},
                          {"alpha", s.alpha},         {"n", s.n},
                          {"K_sat", s.K_sat},         {"l", s.l},
                          {"delta", s.delta}};
  };
  j["soil_R"] = soil(cfg.media.soil_R);
  j["soil_B"] = soil(cfg.media.soil_B);
  j["root"] = {{"theta_sat", cfg.media.root.theta_sat}, {"h_ae", cfg.media.root.h_ae},
               {"E", cfg.media.root.E},                 {"lambda_P", cfg.media.root.lambda_P},
               {"alpha", cfg.media.root.alpha},         {"n", cfg.media.root.n},
               {"delta", cfg.media.root.delta},         {"k_r", cfg.media.root.k_r},
               {"k_ax", cfg.media.root.k_ax},           {"r", cfg.media.root.r},
               {"rho_g", cfg.media.root.rho_g}};
  j["surface"] = {{"ET_o", cfg.media.surface.ET_o}, {"P", cfg.media.surface.P},
                  {"C_RO", cfg.media.surface.C_RO}, {"K_cb", cfg.media.surface.K_cb},
                  {"Ke_max", cfg.media.surface.Ke_max},
                  {"Ke_scale", cfg.media.surface.Ke_scale}};
  j["cell"] = {{"r_P", cfg.cell.geom.r_P},
               {"r_R", cfg.cell.geom.r_R},
               {"N", cfg.cell.geom.N},
               {"mode", cfg.cell.geom.mode == CellMode::disk ? "disk" : "laminate"},
               {"rho_min", cfg.cell.rho_min},
               {"rho_max", cfg.cell.rho_max},
               {"rho_count", cfg.cell.rho_count}};
  j["macro"] = {
      {"L1", cfg.macro.L1},
      {"L2", cfg.macro.L2},
      {"L3", cfg.macro.L3},
      {"n1", cfg.macro.n1},
      {"n2", cfg.macro.n2},
      {"n3", cfg.macro.n3},
      {"column_mode", cfg.macro.column_mode},
      {"a", cfg.macro.a},
      {"weights", cfg.macro.weights == WeightSource::analytic ? "analytic" : "counted"},
      {"initial",
       {{"kind", cfg.macro.init.kind == InitialCondition::Kind::hydrostatic ? "hydrostatic"
                                                                            : "uniform"},
        {"offset_S", cfg.macro.init.offset_S},
        {"offset_P", cfg.macro.init.offset_P},
        {"uniform_S", cfg.macro.init.uniform_S},
        {"uniform_P", cfg.macro.init.uniform_P}}}};
  j["micro"] = {{"dims", cfg.micro.dims == MicroDims::d3 ? "3d" : "strip"},
                {"eps", cfg.micro.eps},
                {"cells_per_eps", cfg.micro.cells_per_eps},
                {"n3", cfg.micro.n3}};
  j["solver"] = {
      {"tau", cfg.solver.tau},
      {"scheme", cfg.solver.scheme == Scheme::rothe ? "rothe" : "fully_implicit"},
      {"nonlinear", cfg.solver.nonlinear == NonlinearMethod::l_scheme ? "l_scheme" : "newton"},
      {"L_stab", cfg.solver.L_stab},
      {"tol_nl", cfg.solver.tol_nl},
      {"max_nl", cfg.solver.max_nl},
      {"tol_lin", cfg.solver.tol_lin},
      {"max_lin", cfg.solver.max_lin},
      {"adaptive_tau", cfg.solver.adaptive_tau},
      {"tau_max", cfg.solver.tau_max},
      {"max_halvings", cfg.solver.max_halvings},
      {"strict", cfg.solver.strict}};
  j["schedule"] = {{"duration", cfg.schedule.duration},
                   {"snapshot_times", cfg.schedule.snapshot_times}};
  j["outputs"] = {{"dir", cfg.outputs.dir},
                  {"snapshot_stride", cfg.outputs.snapshot_stride},
                  {"plots", cfg.outputs.plots}};
  j["compare"] = {{"eps_list", cfg.compare.eps_list},
                  {"dims", cfg.compare.dims == MicroDims::d3 ? "3d" : "strip"},
                  {"macro_n3", cfg.compare.macro_n3}};
  return j;
}

std::string emit_config_text(const RunConfig& cfg) { return emit_config(cfg).dump(2) + "\n"; }

MacroConfig make_macro_config(const RunConfig& cfg, const EffectiveTable* table) {
  MacroConfig mc;
  mc.L1 = cfg.macro.L1;
  mc.L2 = cfg.macro.L2;
  mc.L3 = cfg.macro.L3;
  mc.n1 = cfg.macro.n1;
  mc.n2 = cfg.macro.n2;
  mc.n3 = cfg.macro.n3;
  mc.column_mode = cfg.macro.column_mode;
  mc.a = cfg.macro.a;
  mc.init = cfg.macro.init;
  if (cfg.macro.weights == WeightSource::analytic) {
    mc.w = weights_analytic(cfg.cell.geom);
  } else {
    if (table) {
      mc.w = weights_counted(*table);
    } else {
      UnitCellGeometry g = cfg.cell.geom;
      CellClassification cls = classify_cell(g);
      MacroWeights w;
      w.theta_P = cls.frac_P;
      w.theta_R = cls.frac_R;
      w.theta_B = cls.frac_B;
      w.gamma = cls.perimeter;
      w.gamma_P = w.theta_P > 0 ? w.gamma / w.theta_P : 0.0;
      mc.w = w;
    }
  }
  return mc;
}

MicroBuildParams make_micro_params(const RunConfig& cfg, double eps, MicroDims dims) {
  MicroBuildParams p;
  p.dims = dims;
  p.eps = eps;
  p.L1 = cfg.macro.L1;
  p.L2 = cfg.macro.L2;
  p.L3 = cfg.macro.L3;
  p.cells_per_eps = cfg.micro.cells_per_eps;
  p.n3 = cfg.micro.n3;
  p.r_P = cfg.cell.geom.r_P;
  p.r_R = cfg.cell.geom.r_R;
  return p;
}

}  // namespace rhizohom
