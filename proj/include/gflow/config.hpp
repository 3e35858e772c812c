#pragma once

// Run configuration: a JSON document with a schema_version, strict about
// unknown fields, plus KEY=VALUE overrides on dotted paths.

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "gflow/curvature.hpp"
#include "gflow/errors.hpp"
#include "gflow/flow.hpp"
#include "gflow/monitor.hpp"
#include "gflow/neck.hpp"
#include "gflow/surgery.hpp"

namespace gflow {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct SphereScenario {
  double r0 = 1.0;
};
struct CylinderScenario {
  double r0 = 1.0;
  double length = 20.0;
};
struct DumbbellScenario {
  double bulb_r = 1.0;
  double waist_r = 0.3;
  double separation = 8.0;
};
struct ThreeBulbScenario {
  double bulb_r = 1.0;
  std::vector<double> waists{0.3, 0.33};
  double separation = 8.0;
};
struct FileScenario {
  std::string path;
};
using Scenario = std::variant<SphereScenario, CylinderScenario, DumbbellScenario, ThreeBulbScenario, FileScenario>;

enum class RunMode { Flow, Surgery };

struct OutputConfig {
  double snapshot_interval = 0.05;
  int summary_interval = 1000;
  int monitor_interval = 50;
  double ratio_cap = 1e3;
};

struct RunConfig {
  int n = 3;
  Scenario scenario = DumbbellScenario{};
  RunMode mode = RunMode::Surgery;
  StepControl step;
  std::optional<double> t_end;       // flow mode
  std::optional<double> min_radius;  // flow mode
  NeckParams neck;
  bool neck_g0_set = false;
  double c_sharp = 1.0;
  double g1 = 2.5, g2 = 5.0, g3 = 10.0;
  LoopOptions loop;
  MonitorConfig monitor;
  bool monitor_threshold_set = false;
  OutputConfig output;
  std::uint64_t seed = 0;

  Dimension dim() const { return Dimension(n); }
  SurgeryThresholds thresholds() const { return SurgeryThresholds(g1, g2, g3); }
};

inline const char* scenario_name(const Scenario& s) {
  switch (s.index()) {
    case 0: return "sphere";
    case 1: return "cylinder";
    case 2: return "dumbbell";
    case 3: return "three_bulb";
    default: return "from_file";
  }
}

namespace detail {

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(field(key), "must be finite");
    return d;
  }

  double positive(const std::string& key, double fallback) {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ConfigError(field(key), "must be positive");
    return d;
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v.get<int>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    return Reader(j_.at(key), field(key));
  }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Scenario parse_scenario(Reader r) {
  const std::string kind = r.string("kind", "");
  Scenario s;
  if (kind == "sphere") {
    s = SphereScenario{r.positive("r0", 1.0)};
  } else if (kind == "cylinder") {
    s = CylinderScenario{r.positive("r0", 1.0), r.positive("length", 20.0)};
  } else if (kind == "dumbbell") {
    DumbbellScenario d;
    d.bulb_r = r.positive("bulb_r", d.bulb_r);
    d.waist_r = r.positive("waist_r", d.waist_r);
    d.separation = r.positive("separation", d.separation);
    if (!(d.waist_r < d.bulb_r)) throw ConfigError(r.field("waist_r"), "must be smaller than bulb_r");
    if (!(d.separation > 2.0 * d.bulb_r)) throw ConfigError(r.field("separation"), "must exceed 2 bulb_r");
    s = d;
  } else if (kind == "three_bulb") {
    ThreeBulbScenario d;
    d.bulb_r = r.positive("bulb_r", d.bulb_r);
    d.separation = r.positive("separation", d.separation);
    if (r.has("waists")) {
      const Json& w = r.raw("waists");
      if (!w.is_array() || w.size() != 2) throw ConfigError(r.field("waists"), "expected an array of 2 radii");
      d.waists.clear();
      for (const auto& v : w) {
        if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() < d.bulb_r)) {
          throw ConfigError(r.field("waists"), "each radius must lie in (0, bulb_r)");
        }
        d.waists.push_back(v.get<double>());
      }
    }
    if (!(d.separation > 2.0 * d.bulb_r)) throw ConfigError(r.field("separation"), "must exceed 2 bulb_r");
    s = d;
  } else if (kind == "from_file") {
    FileScenario f{r.string("path", "")};
    if (f.path.empty()) throw ConfigError(r.field("path"), "required for from_file");
    s = f;
  } else {
    throw ConfigError(r.field("kind"), "expected one of sphere, cylinder, dumbbell, three_bulb, from_file");
  }
  r.finish();
  return s;
}

}  // namespace detail

/// Builds a RunConfig from a parsed document. Throws ConfigError naming the
/// offending field.
inline RunConfig parse_config(const Json& doc) {
  detail::Reader root(doc, "");
  if (!root.has("schema_version")) throw ConfigError("schema_version", "required");
  if (root.integer("schema_version", 0) != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  RunConfig c;
  c.n = root.integer("dimension", 3);
  if (c.n < 3) throw ConfigError("dimension", "must be at least 3");
  const Dimension dim(c.n);

  if (!root.has("scenario")) throw ConfigError("scenario", "required");
  c.scenario = detail::parse_scenario(root.child("scenario"));
  const bool smooth_model = std::holds_alternative<SphereScenario>(c.scenario) ||
                            std::holds_alternative<CylinderScenario>(c.scenario);
  c.mode = smooth_model ? RunMode::Flow : RunMode::Surgery;
  if (root.has("mode")) {
    const std::string m = root.string("mode", "");
    if (m == "flow") {
      c.mode = RunMode::Flow;
    } else if (m == "surgery") {
      c.mode = RunMode::Surgery;
    } else {
      throw ConfigError("mode", "expected flow or surgery");
    }
  }

  if (root.has("step")) {
    auto r = root.child("step");
    c.step.cfl = r.number("cfl", c.step.cfl);
    c.step.dt_max = r.positive("dt_max", c.step.dt_max);
    c.step.spacing = r.positive("spacing", c.step.spacing);
    c.step.resample_drift = r.positive("resample_drift", c.step.resample_drift);
    if (!(c.step.cfl > 0.0 && c.step.cfl <= 0.5)) throw ConfigError("step.cfl", "must lie in (0, 0.5]");
    r.finish();
  }

  if (root.has("stop")) {
    auto r = root.child("stop");
    if (r.has("t_end")) c.t_end = r.number("t_end", 0.0);
    if (r.has("min_radius")) c.min_radius = r.positive("min_radius", 1.0);
    if (c.t_end && *c.t_end < 0.0) throw ConfigError("stop.t_end", "must be non-negative");
    r.finish();
  }

  c.neck = NeckParams::defaults(dim);
  if (root.has("neck")) {
    auto r = root.child("neck");
    c.neck.epsilon = r.number("epsilon", c.neck.epsilon);
    c.neck.L = r.number("L", c.neck.L);
    c.neck.theta = r.number("theta", c.neck.theta);
    c.neck.eta0 = r.positive("eta0", c.neck.eta0);
    if (r.has("g0")) {
      c.neck.g0 = r.positive("g0", 1.0);
      c.neck_g0_set = true;
    }
    c.neck.rho_coefficient = r.positive("rho_coefficient", c.neck.rho_coefficient);
    c.neck.candidate_stride = r.integer("candidate_stride", c.neck.candidate_stride);
    c.c_sharp = r.positive("c_sharp", c.c_sharp);
    r.finish();
    if (!(c.neck.epsilon > 0.0 && c.neck.epsilon <= 0.2)) throw ConfigError("neck.epsilon", "must lie in (0, 0.2]");
    if (!(c.neck.L >= 10.0)) throw ConfigError("neck.L", "must be at least 10");
    if (!(c.neck.theta >= 0.0)) throw ConfigError("neck.theta", "must be non-negative");
    if (c.neck.candidate_stride < 1) throw ConfigError("neck.candidate_stride", "must be positive");
  }
  c.neck.d_sharp = d_sharp(c.c_sharp, dim);
  if (c.neck.theta > *c.neck.d_sharp) {
    throw ConfigError("neck.theta", "must not exceed d_sharp = " + std::to_string(*c.neck.d_sharp));
  }

  if (root.has("thresholds")) {
    auto r = root.child("thresholds");
    c.g1 = r.positive("g1", c.g1);
    const bool by_omega = r.has("omega2") || r.has("omega3");
    if (by_omega) {
      if (r.has("g2") || r.has("g3")) {
        throw ConfigError("thresholds", "give either g2/g3 or omega2/omega3, not both");
      }
      const double w2 = r.number("omega2", 2.0);
      const double w3 = r.number("omega3", 2.0);
      if (!(w2 > 1.0) || !(w3 > 1.0)) throw ConfigError("thresholds", "threshold chain requires omega2, omega3 > 1");
      c.g2 = w2 * c.g1;
      c.g3 = w3 * c.g2;
    } else {
      c.g2 = r.number("g2", 2.0 * c.g1);
      c.g3 = r.number("g3", 2.0 * c.g2);
    }
    r.finish();
  }
  if (!(c.g1 < c.g2 && c.g2 < c.g3)) {
    throw ConfigError("thresholds", "threshold chain g1 < g2 < g3 violated (g1=" + std::to_string(c.g1) +
                                        ", g2=" + std::to_string(c.g2) + ", g3=" + std::to_string(c.g3) + ")");
  }

  c.loop.cap.spacing = c.step.spacing;
  if (root.has("surgery")) {
    auto r = root.child("surgery");
    c.loop.max_surgeries = r.integer("max_surgeries", c.loop.max_surgeries);
    if (c.loop.max_surgeries < 0) throw ConfigError("surgery.max_surgeries", "must be non-negative");
    if (r.has("t_max")) c.loop.t_max = r.positive("t_max", 1.0);
    c.loop.detect_interval = r.integer("detect_interval", c.loop.detect_interval);
    const std::string rule = r.string("cut_rule", "primary");
    if (rule == "primary") {
      c.loop.cut_rule = CutRadiusRule::Primary;
    } else if (rule == "alternative") {
      c.loop.cut_rule = CutRadiusRule::Alternative;
    } else {
      throw ConfigError("surgery.cut_rule", "expected primary or alternative");
    }
    c.loop.cap.tip_fraction = r.positive("cap_tip_fraction", c.loop.cap.tip_fraction);
    if (r.has("dichotomy")) {
      auto d = r.child("dichotomy");
      c.loop.dichotomy.eta0 = d.positive("eta0", c.loop.dichotomy.eta0);
      c.loop.dichotomy.c_sharp = d.positive("c_sharp", c.loop.dichotomy.c_sharp);
      c.loop.dichotomy.g_sharp = d.positive("g_sharp", c.loop.dichotomy.g_sharp);
      d.finish();
    }
    r.finish();
  }

  if (root.has("monitor")) {
    auto r = root.child("monitor");
    if (r.has("g_threshold")) {
      c.monitor.g_threshold = r.positive("g_threshold", 1.0);
      c.monitor_threshold_set = true;
    }
    c.monitor.sample_stride = r.integer("sample_stride", c.monitor.sample_stride);
    if (c.monitor.sample_stride < 1) throw ConfigError("monitor.sample_stride", "must be positive");
    r.finish();
  }

  if (root.has("output")) {
    auto r = root.child("output");
    c.output.snapshot_interval = r.positive("snapshot_interval", c.output.snapshot_interval);
    c.output.summary_interval = r.integer("summary_interval", c.output.summary_interval);
    c.output.monitor_interval = r.integer("monitor_interval", c.output.monitor_interval);
    c.output.ratio_cap = r.positive("ratio_cap", c.output.ratio_cap);
    if (c.output.summary_interval < 1) throw ConfigError("output.summary_interval", "must be positive");
    if (c.output.monitor_interval < 1) throw ConfigError("output.monitor_interval", "must be positive");
    r.finish();
  }

  if (root.has("seed")) {
    const Json& v = root.raw("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError("seed", "expected a non-negative integer");
    }
    c.seed = v.get<std::uint64_t>();
  }
  root.finish();
  return c;
}

/// Parses VALUE as JSON when possible, otherwise as a plain string.
inline Json parse_override_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return Json(text);
  }
}

/// Applies KEY=VALUE with a dotted KEY, creating intermediate objects.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like KEY=VALUE");
  const std::string key = assignment.substr(0, eq);
  const Json value = parse_override_value(assignment.substr(eq + 1));
  Json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError(key, "empty path component");
    if (!node->is_object()) throw ConfigError(key, "path runs through a non-object");
    if (i + 1 == parts.size()) {
      (*node)[parts[i]] = value;
    } else {
      node = &(*node)[parts[i]];
      if (node->is_null()) *node = Json::object();
    }
  }
}

inline Json read_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path, std::string("parse error: ") + e.what());
  }
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  Json doc = read_config_document(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

}  // namespace gflow
