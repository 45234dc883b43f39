#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <titerlab/analyzer.hpp>
#include <titerlab/ensemble.hpp>
#include <titerlab/grid.hpp>
#include <titerlab/model.hpp>

namespace titerlab {

// Run configuration: one JSON tree describing the model, the discretization,
// the ensemble parameters and the output layout. Parsing is strict: unknown
// keys anywhere are an error, so typos cannot silently fall back to defaults.

namespace cfgdetail {

using nlohmann::json;

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object())
    throw std::invalid_argument("config: " + where + " must be an object");
}

inline void require_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  require_object(j, where);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) { known = true; break; }
    if (!known)
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
  }
}

inline double num_at(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key))
    throw std::invalid_argument("config: " + where + " needs '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number())
    throw std::invalid_argument("config: " + where + "." + key + " must be a number");
  return v.get<double>();
}

inline double num_or(const json& j, const std::string& where, const char* key, double dflt) {
  return j.contains(key) ? num_at(j, where, key) : dflt;
}

inline std::string str_at(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key))
    throw std::invalid_argument("config: " + where + " needs '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_string())
    throw std::invalid_argument("config: " + where + "." + key + " must be a string");
  return v.get<std::string>();
}

}  // namespace cfgdetail

inline std::string config_hash(const nlohmann::json& j) {
  // FNV-1a over the canonical dump (nlohmann keeps object keys sorted)
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config: " + path + " is not valid JSON: " + e.what());
  }
}

// --key.path=value support: the value is parsed as JSON when it is one
// (numbers, arrays, booleans), and kept as a string otherwise.
inline void apply_override(nlohmann::json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override '" + assignment + "' must look like section.key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  nlohmann::json* node = &root;
  std::size_t pos = 0;
  for (;;) {
    const auto dot = path.find('.', pos);
    const std::string key =
        dot == std::string::npos ? path.substr(pos) : path.substr(pos, dot - pos);
    if (key.empty())
      throw std::invalid_argument("override '" + assignment + "' has an empty path segment");
    if (!node->is_object() && !node->is_null())
      throw std::invalid_argument("override '" + assignment + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

inline BoostMap build_boost(const nlohmann::json& j) {
  using namespace cfgdetail;
  const std::string where = "model.boost";
  const std::string family = str_at(j, where, "family");
  if (family == "additive_boost") {
    require_keys(j, where, {"family", "L"});
    return BoostMap::additive(num_at(j, where, "L"));
  }
  if (family == "affine_boost") {
    require_keys(j, where, {"family", "b", "c"});
    return BoostMap::affine(num_at(j, where, "b"), num_at(j, where, "c"));
  }
  if (family == "saturating_boost") {
    require_keys(j, where, {"family", "M", "theta"});
    return BoostMap::saturating(num_at(j, where, "M"), num_at(j, where, "theta"));
  }
  if (family == "plateau_boost") {
    require_keys(j, where, {"family", "K", "M", "inner"});
    return BoostMap::plateau(num_at(j, where, "K"), num_at(j, where, "M"),
                             Expr::parse(str_at(j, where, "inner")));
  }
  throw std::invalid_argument("config: unknown boost family '" + family + "'");
}

inline FlowModel build_flow(const nlohmann::json& j, const PhaseSpace& domain) {
  using namespace cfgdetail;
  const std::string where = "model.flow";
  const std::string family = str_at(j, where, "family");
  if (family == "linear_decay") {
    require_keys(j, where, {"family", "a"});
    return FlowModel::linear_decay(num_at(j, where, "a"), domain);
  }
  if (family == "power_decay") {
    require_keys(j, where, {"family", "a", "p"});
    return FlowModel::power_decay(num_at(j, where, "a"), num_at(j, where, "p"), domain);
  }
  if (family == "custom") {
    require_keys(j, where, {"family", "expr"});
    return FlowModel::custom(Expr::parse(str_at(j, where, "expr")), domain);
  }
  throw std::invalid_argument("config: unknown flow family '" + family + "'");
}

inline ModelSpec build_model(const nlohmann::json& jm) {
  using namespace cfgdetail;
  require_keys(jm, "model", {"flow", "boost", "lambda", "phase_space"});
  if (!jm.contains("flow") || !jm.contains("boost"))
    throw std::invalid_argument("config: model needs 'flow' and 'boost'");
  BoostMap boost = build_boost(jm.at("boost"));
  PhaseSpace domain = boost.domain();
  if (jm.contains("phase_space")) {
    const auto& ps = jm.at("phase_space");
    PhaseSpace declared = PhaseSpace::half_line();
    if (ps.is_string() && ps.get<std::string>() == "half_line") {
      declared = PhaseSpace::half_line();
    } else if (ps.is_object()) {
      require_keys(ps, "model.phase_space", {"upper"});
      declared = PhaseSpace::interval(num_at(ps, "model.phase_space", "upper"));
    } else {
      throw std::invalid_argument(
          "config: model.phase_space must be \"half_line\" or {\"upper\": M}");
    }
    if (declared != domain)
      throw std::invalid_argument("config: model.phase_space contradicts the boost family (" +
                                  declared.describe() + " vs " + domain.describe() + ")");
  }
  FlowModel flow = build_flow(jm.at("flow"), domain);
  const double lambda = num_at(jm, "model", "lambda");
  return ModelSpec(std::move(flow), std::move(boost), lambda);
}

struct GridConfig {
  double x_max = 8.0;
  int n_cells = 400;
};

struct InitialConfig {
  enum class Kind { Uniform, PointMass };
  Kind kind = Kind::Uniform;
  double lo = 0.0, hi = 1.0;
  double x0 = 1.0;
};

struct SimConfig {
  long n_paths = 10000;
  std::uint64_t seed = 42;
  double t_end = 2.0;
  std::vector<double> checkpoints;  // empty means {t_end}
  int n_store_paths = 10;
  double gamma = 0.1;  // negative-moment exponent
};

struct SolverConfig {
  double cfl_safety = 0.5;
  double mass_tol = 1e-8;
  double stationary_residual = 1e-10;
  int max_iterations = 200;
};

struct OutputConfig {
  std::string directory = "out";
  bool csv = true;
  bool json_out = true;
};

struct SweepAxis {
  bool fixed = true;
  double value = 0.0;
  double lo = 0.0, hi = 0.0;
  int steps = 1;
};

struct SweepConfig {
  bool present = false;
  SweepAxis a, b;
  double lambda = 1.0;
};

struct RunConfig {
  nlohmann::json raw;
  std::string hash;
  std::optional<ModelSpec> model;
  GridConfig grid;
  InitialConfig initial;
  std::optional<InitialConfig> initial2;
  SimConfig sim;
  SolverConfig solver;
  FoguelOptions analysis;
  OutputConfig output;
  SweepConfig sweep;
};

namespace cfgdetail {

inline InitialConfig parse_initial(const json& j, const std::string& where) {
  InitialConfig ic;
  const std::string kind = str_at(j, where, "kind");
  if (kind == "uniform") {
    require_keys(j, where, {"kind", "lo", "hi"});
    ic.kind = InitialConfig::Kind::Uniform;
    ic.lo = num_at(j, where, "lo");
    ic.hi = num_at(j, where, "hi");
    if (!(ic.lo >= 0.0) || !(ic.hi > ic.lo))
      throw std::invalid_argument("config: " + where + " needs 0 <= lo < hi");
  } else if (kind == "point_mass") {
    require_keys(j, where, {"kind", "x0"});
    ic.kind = InitialConfig::Kind::PointMass;
    ic.x0 = num_at(j, where, "x0");
    if (!(ic.x0 >= 0.0))
      throw std::invalid_argument("config: " + where + ".x0 must be >= 0");
  } else {
    throw std::invalid_argument("config: " + where + ".kind must be uniform or point_mass");
  }
  return ic;
}

inline SweepAxis parse_axis(const json& j, const std::string& where) {
  SweepAxis ax;
  if (j.is_number()) {
    ax.fixed = true;
    ax.value = j.get<double>();
    return ax;
  }
  require_keys(j, where, {"min", "max", "steps"});
  ax.fixed = false;
  ax.lo = num_at(j, where, "min");
  ax.hi = num_at(j, where, "max");
  const double steps = num_at(j, where, "steps");
  ax.steps = int(steps);
  if (ax.steps != steps || ax.steps < 2 || !(ax.hi > ax.lo))
    throw std::invalid_argument("config: " + where + " needs min < max and integer steps >= 2");
  return ax;
}

}  // namespace cfgdetail

inline RunConfig parse_config(const nlohmann::json& root) {
  using namespace cfgdetail;
  try {
    require_keys(root, "the top level",
                 {"model", "grid", "initial", "initial2", "sim", "solver", "analysis",
                  "output", "sweep"});
    RunConfig cfg;
    cfg.raw = root;
    // The hash identifies the computation; where results land is not part of it.
    nlohmann::json hashed = root;
    hashed.erase("output");
    cfg.hash = config_hash(hashed);

    if (root.contains("model")) cfg.model = build_model(root.at("model"));

    if (root.contains("grid")) {
      const auto& g = root.at("grid");
      require_keys(g, "grid", {"x_max", "n_cells"});
      cfg.grid.x_max = num_at(g, "grid", "x_max");
      const double nc = num_at(g, "grid", "n_cells");
      cfg.grid.n_cells = int(nc);
      if (!(cfg.grid.x_max > 0.0) || cfg.grid.n_cells != nc || cfg.grid.n_cells < 2)
        throw std::invalid_argument("config: grid needs x_max > 0 and integer n_cells >= 2");
    }
    if (cfg.model && cfg.model->phase_space.bounded())
      cfg.grid.x_max = root.contains("grid") ? cfg.grid.x_max : cfg.model->phase_space.upper();

    if (root.contains("initial"))
      cfg.initial = parse_initial(root.at("initial"), "initial");
    if (root.contains("initial2"))
      cfg.initial2 = parse_initial(root.at("initial2"), "initial2");

    if (root.contains("sim")) {
      const auto& s = root.at("sim");
      require_keys(s, "sim",
                   {"n_paths", "seed", "t_end", "checkpoints", "n_store_paths", "gamma"});
      const double np = num_or(s, "sim", "n_paths", double(cfg.sim.n_paths));
      cfg.sim.n_paths = long(np);
      if (cfg.sim.n_paths != np || cfg.sim.n_paths < 1)
        throw std::invalid_argument("config: sim.n_paths must be an integer >= 1");
      const double sd = num_or(s, "sim", "seed", double(cfg.sim.seed));
      if (sd < 0 || sd != std::uint64_t(sd))
        throw std::invalid_argument("config: sim.seed must be a nonnegative integer");
      cfg.sim.seed = std::uint64_t(sd);
      cfg.sim.t_end = num_or(s, "sim", "t_end", cfg.sim.t_end);
      if (!(cfg.sim.t_end > 0.0))
        throw std::invalid_argument("config: sim.t_end must be positive");
      if (s.contains("checkpoints")) {
        const auto& cp = s.at("checkpoints");
        if (!cp.is_array() || cp.empty())
          throw std::invalid_argument("config: sim.checkpoints must be a nonempty array");
        double prev = 0.0;
        for (const auto& v : cp) {
          if (!v.is_number())
            throw std::invalid_argument("config: sim.checkpoints entries must be numbers");
          const double t = v.get<double>();
          if (!(t > prev))
            throw std::invalid_argument(
                "config: sim.checkpoints must be strictly increasing and positive");
          cfg.sim.checkpoints.push_back(t);
          prev = t;
        }
      }
      const double nsp = num_or(s, "sim", "n_store_paths", double(cfg.sim.n_store_paths));
      cfg.sim.n_store_paths = int(nsp);
      if (cfg.sim.n_store_paths != nsp || cfg.sim.n_store_paths < 0)
        throw std::invalid_argument("config: sim.n_store_paths must be an integer >= 0");
      cfg.sim.gamma = num_or(s, "sim", "gamma", cfg.sim.gamma);
      if (!(cfg.sim.gamma > 0.0))
        throw std::invalid_argument("config: sim.gamma must be positive");
    }
    if (cfg.sim.checkpoints.empty()) cfg.sim.checkpoints = {cfg.sim.t_end};

    if (root.contains("solver")) {
      const auto& s = root.at("solver");
      require_keys(s, "solver",
                   {"cfl_safety", "mass_tol", "stationary_residual", "max_iterations"});
      cfg.solver.cfl_safety = num_or(s, "solver", "cfl_safety", cfg.solver.cfl_safety);
      cfg.solver.mass_tol = num_or(s, "solver", "mass_tol", cfg.solver.mass_tol);
      cfg.solver.stationary_residual =
          num_or(s, "solver", "stationary_residual", cfg.solver.stationary_residual);
      const double mi = num_or(s, "solver", "max_iterations", double(cfg.solver.max_iterations));
      cfg.solver.max_iterations = int(mi);
      if (!(cfg.solver.cfl_safety > 0.0) || cfg.solver.cfl_safety > 1.0 ||
          !(cfg.solver.mass_tol > 0.0) || !(cfg.solver.stationary_residual > 0.0) ||
          cfg.solver.max_iterations != mi || cfg.solver.max_iterations < 1)
        throw std::invalid_argument("config: solver tolerances out of range");
    }

    if (root.contains("analysis")) {
      const auto& a = root.at("analysis");
      require_keys(a, "analysis",
                   {"tail_probe", "horizon", "x_max_cap", "grid_cells", "kappa", "seed",
                    "classify_tol"});
      cfg.analysis.tail_probe = num_or(a, "analysis", "tail_probe", cfg.analysis.tail_probe);
      cfg.analysis.horizon = num_or(a, "analysis", "horizon", cfg.analysis.horizon);
      cfg.analysis.x_max_cap = num_or(a, "analysis", "x_max_cap", cfg.analysis.x_max_cap);
      const double gc = num_or(a, "analysis", "grid_cells", double(cfg.analysis.grid_cells));
      cfg.analysis.grid_cells = int(gc);
      cfg.analysis.kappa = num_or(a, "analysis", "kappa", cfg.analysis.kappa);
      const double asd = num_or(a, "analysis", "seed", double(cfg.analysis.seed));
      cfg.analysis.seed = std::uint64_t(asd);
      cfg.analysis.classify_tol =
          num_or(a, "analysis", "classify_tol", cfg.analysis.classify_tol);
      if (!(cfg.analysis.tail_probe > 0.0) || !(cfg.analysis.horizon > 0.0) ||
          !(cfg.analysis.x_max_cap > 0.0) || cfg.analysis.grid_cells != gc ||
          cfg.analysis.grid_cells < 2 || !(cfg.analysis.kappa > 0.0) ||
          !(cfg.analysis.kappa < 1.0) || asd != cfg.analysis.seed ||
          !(cfg.analysis.classify_tol >= 0.0))
        throw std::invalid_argument("config: analysis parameters out of range");
    }

    if (root.contains("output")) {
      const auto& o = root.at("output");
      require_keys(o, "output", {"directory", "formats"});
      if (o.contains("directory")) {
        cfg.output.directory = str_at(o, "output", "directory");
        if (cfg.output.directory.empty())
          throw std::invalid_argument("config: output.directory must be nonempty");
      }
      if (o.contains("formats")) {
        const auto& f = o.at("formats");
        if (!f.is_array() || f.empty())
          throw std::invalid_argument("config: output.formats must be a nonempty array");
        cfg.output.csv = cfg.output.json_out = false;
        for (const auto& v : f) {
          const std::string s = v.is_string() ? v.get<std::string>() : "";
          if (s == "csv") cfg.output.csv = true;
          else if (s == "json") cfg.output.json_out = true;
          else throw std::invalid_argument("config: output.formats entries must be csv or json");
        }
      }
    }

    if (root.contains("sweep")) {
      const auto& s = root.at("sweep");
      require_keys(s, "sweep", {"a", "b", "lambda"});
      cfg.sweep.present = true;
      if (!s.contains("a"))
        throw std::invalid_argument("config: sweep needs an 'a' axis");
      cfg.sweep.a = parse_axis(s.at("a"), "sweep.a");
      cfg.sweep.b = s.contains("b") ? parse_axis(s.at("b"), "sweep.b") : SweepAxis{true, 2.0};
      cfg.sweep.lambda = num_or(s, "sweep", "lambda", 1.0);
      if (!(cfg.sweep.lambda > 0.0))
        throw std::invalid_argument("config: sweep.lambda must be positive");
    }

    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: malformed document: ") + e.what());
  }
}

inline DensityVector initial_density(const InitialConfig& ic, const Grid& grid) {
  if (ic.kind == InitialConfig::Kind::Uniform)
    return DensityVector::uniform(grid, ic.lo, ic.hi);
  return DensityVector::delta(grid, ic.x0);
}

inline InitialDistribution initial_distribution(const InitialConfig& ic) {
  if (ic.kind == InitialConfig::Kind::Uniform)
    return InitialDistribution::uniform(ic.lo, ic.hi);
  return InitialDistribution::point_mass(ic.x0);
}

}  // namespace titerlab
