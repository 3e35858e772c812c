#pragma once

// Batch orchestration behind the gflow subcommands.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gflow/config.hpp"
#include "gflow/flow.hpp"
#include "gflow/io.hpp"
#include "gflow/monitor.hpp"
#include "gflow/neck.hpp"
#include "gflow/presets.hpp"
#include "gflow/surgery.hpp"

namespace gflow {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 1;
inline constexpr int kTooManySurgeries = 2;
inline constexpr int kNumerical = 3;
inline constexpr int kValidation = 4;
inline constexpr int kNoNeck = 5;
}  // namespace exit_code

inline std::vector<ProfileCurve> initial_curves(const RunConfig& cfg) {
  const double h = cfg.step.spacing;
  return std::visit(
      [&](const auto& s) -> std::vector<ProfileCurve> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, SphereScenario>) {
          return {sphere_profile(s.r0, h)};
        } else if constexpr (std::is_same_v<S, CylinderScenario>) {
          return {cylinder_profile(s.r0, s.length, h)};
        } else if constexpr (std::is_same_v<S, DumbbellScenario>) {
          return {dumbbell_profile(s.bulb_r, s.waist_r, s.separation, h)};
        } else if constexpr (std::is_same_v<S, ThreeBulbScenario>) {
          return {chain_profile(ChainShape{s.bulb_r, s.waists, s.separation}, h)};
        } else {
          return {read_snapshot(s.path)};
        }
      },
      cfg.scenario);
}

struct RunResult {
  int exit_code = exit_code::kOk;
  std::string message;
  std::string verdict;
  int surgeries = 0;
  int final_components = 0;
  int necks = 0;
  double t = 0.0;
};

namespace detail {

// Fills in the defaults that depend on the initial data.
inline void resolve_defaults(RunConfig& cfg, double initial_max_g) {
  if (!cfg.neck_g0_set) cfg.neck.g0 = 10.0 * initial_max_g;
  if (!cfg.monitor_threshold_set) cfg.monitor.g_threshold = 10.0 * initial_max_g;
}

class RunRecorder {
 public:
  RunRecorder(const RunConfig& cfg, const std::filesystem::path& out)
      : cfg_(cfg), dir_(out), snap_dir_(out / "snapshots"), events_(out / "events.jsonl") {
    estimates_path_ = (out / "estimates.jsonl").string();
    std::ofstream(estimates_path_, std::ios::trunc);
    next_snapshot_ = cfg.output.snapshot_interval;
  }

  EventLog& events() { return events_; }

  void on_step(const FlowState& st, const StepInfo& info) {
    const Dimension dim = cfg_.dim();
    if (st.step % cfg_.output.summary_interval == 0) {
      EventLog::Object o;
      o["step"] = st.step;
      o["dt"] = info.dt;
      o["max_g"] = max_speed(st, dim);
      o["components"] = st.components.size();
      events_.emit(st.t, "step_summary", o);
    }
    if (st.step % cfg_.output.monitor_interval == 0) {
      const EstimateSnapshot e = scan(st, cfg_.monitor, dim);
      persist({e}, estimates_path_);
      check_ratio(e.t, "grad_ratio", e.grad_ratio);
      check_ratio(e.t, "time_ratio", e.time_ratio);
    }
    if (st.t >= next_snapshot_) {
      snapshot(st);
      while (next_snapshot_ <= st.t) next_snapshot_ += cfg_.output.snapshot_interval;
    }
  }

  void snapshot(const FlowState& st) { write_snapshot(snap_dir_, st, cfg_.dim()); }

 private:
  void check_ratio(double t, const char* name, const std::optional<double>& v) {
    if (!v || *v <= cfg_.output.ratio_cap) return;
    EventLog::Object o;
    o["quantity"] = name;
    o["value"] = *v;
    o["cap"] = cfg_.output.ratio_cap;
    events_.emit(t, "estimate_violation", o);
  }

  const RunConfig& cfg_;
  std::filesystem::path dir_, snap_dir_;
  EventLog events_;
  std::string estimates_path_;
  double next_snapshot_ = 0.0;
};

inline RunResult run_flow(FlowState& st, const RunConfig& cfg, RunRecorder& rec) {
  const Dimension dim = cfg.dim();
  StopCondition stop = StopAtMaxG{cfg.g3};
  if (cfg.t_end) {
    stop = StopAtTime{*cfg.t_end};
  } else if (cfg.min_radius) {
    stop = StopAtMinRadius{*cfg.min_radius};
  } else if (const auto* s = std::get_if<SphereScenario>(&cfg.scenario)) {
    stop = StopAtTime{0.9 * extinction_time(Sphere{}, s->r0, dim)};
  } else if (const auto* c = std::get_if<CylinderScenario>(&cfg.scenario)) {
    stop = StopAtTime{0.9 * extinction_time(Cylinder{}, c->r0, dim)};
  }
  const StopReason why = run_until(st, cfg.step, dim, stop, [&](const FlowState& s, const StepInfo& i) {
    rec.on_step(s, i);
  });
  RunResult r;
  r.verdict = to_string(why);
  r.final_components = static_cast<int>(st.components.size());
  return r;
}

inline RunResult run_loop(FlowState& st, const RunConfig& cfg, RunRecorder& rec, const LoopObserver& extra) {
  const Dimension dim = cfg.dim();
  LoopObserver obs;
  RunResult r;
  obs.on_step = [&](const FlowState& s, const StepInfo& i) {
    rec.on_step(s, i);
    if (extra.on_step) extra.on_step(s, i);
  };
  obs.on_necks = [&](const FlowState& s, const std::vector<NeckRegion>& necks) {
    for (const auto& n : necks) rec.events().emit(s.t, "neck_detected", neck_fields(n));
    if (extra.on_necks) extra.on_necks(s, necks);
  };
  obs.on_trigger = [&](const FlowState& s) {
    rec.snapshot(s);
    if (extra.on_trigger) extra.on_trigger(s);
  };
  obs.on_surgery = [&](const FlowState& s, const PerformResult& p) {
    rec.events().emit(s.t, "surgery", surgery_fields(p));
    rec.snapshot(s);
    if (extra.on_surgery) extra.on_surgery(s, p);
  };
  obs.on_discard = [&](const FlowState& s, const ComponentVerdict& v) {
    rec.events().emit(s.t, "component_discarded", verdict_fields(v));
    if (extra.on_discard) extra.on_discard(s, v);
  };
  LoopOptions opt = cfg.loop;
  opt.cap.spacing = cfg.step.spacing;
  const TerminationReport rep = surgery_loop(st, cfg.thresholds(), cfg.neck, cfg.step, dim, opt, obs);
  r.verdict = to_string(rep.verdict);
  r.surgeries = rep.surgeries;
  r.final_components = rep.final_components;
  if (rep.verdict == LoopVerdict::TimeLimit) {
    r.exit_code = exit_code::kNumerical;
    r.message = "time limit reached before termination";
  }
  return r;
}

}  // namespace detail

/// Builds the initial state, rejecting data that is not 2-convex, and fills in
/// the defaults that depend on it.
inline FlowState prepare_run(RunConfig& cfg) {
  const Dimension dim = cfg.dim();
  FlowState st = make_state(initial_curves(cfg));
  double g_init = 0.0;
  for (const auto& [id, cp] : st.components) {
    const NodeFields f = evaluate_nodes(*cp, dim);
    if (f.first_bad) throw ConfigError("scenario", "initial data is not 2-convex");
    g_init = std::max(g_init, f.max_g());
  }
  detail::resolve_defaults(cfg, g_init);
  cfg.neck.validate();
  return st;
}

/// Runs one configured scenario, writing events.jsonl, estimates.jsonl and
/// snapshots/ under `out`. `extra` observes the surgery loop alongside the
/// recorder.
inline RunResult run_config(RunConfig cfg, const std::filesystem::path& out, const LoopObserver& extra = {}) {
  std::filesystem::create_directories(out);
  FlowState st = prepare_run(cfg);

  detail::RunRecorder rec(cfg, out);
  rec.snapshot(st);
  RunResult r;
  try {
    r = cfg.mode == RunMode::Flow ? detail::run_flow(st, cfg, rec) : detail::run_loop(st, cfg, rec, extra);
  } catch (const AbortTooManySurgeries& e) {
    r.exit_code = exit_code::kTooManySurgeries;
    r.message = e.what();
    r.verdict = "aborted";
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    r.exit_code = exit_code::kNumerical;
    r.message = e.what();
    r.verdict = "numerical failure";
  }
  r.surgeries = static_cast<int>(st.log.size());
  r.necks = rec.events().count("neck_detected");
  r.t = st.t;
  if (!st.components.empty()) rec.snapshot(st);

  EventLog::Object o;
  o["verdict"] = r.verdict;
  o["surgeries"] = r.surgeries;
  o["final_components"] = r.final_components;
  o["exit_code"] = r.exit_code;
  if (!r.message.empty()) o["message"] = r.message;
  rec.events().emit(st.t, "termination", o);
  rec.events().flush();
  return r;
}

/// Config loading plus run, mapping errors to exit codes.
inline RunResult cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
                         const std::filesystem::path& out) {
  try {
    return run_config(load_config(config_path, overrides), out);
  } catch (const ConfigError& e) {
    RunResult r;
    r.exit_code = exit_code::kConfig;
    r.message = std::string("config error: ") + e.what();
    return r;
  } catch (const Error& e) {
    RunResult r;
    r.exit_code = exit_code::kConfig;
    r.message = std::string("cannot set up run: ") + e.what();
    return r;
  }
}

struct DetectResult {
  int exit_code = exit_code::kOk;
  std::string message;
  std::vector<NeckRegion> necks;
};

inline constexpr const char* kNeckRowHeader =
    "component_id,s_a,s_b,center_s,x_lo,x_hi,mean_radius,radius_deviation,axis_deviation,center_g,center_l1_over_g";

inline std::string neck_row(const NeckRegion& n) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                static_cast<long long>(n.component_id), n.s_a, n.s_b, n.center_s, n.axial.lo, n.axial.hi,
                n.mean_radius, n.radius_deviation, n.axis_deviation, n.center_g, n.center_l1_over_g);
  return buf;
}

/// Single-time neck detection on a saved snapshot. theta is forced to 0; g0
/// defaults to half the snapshot's max G.
inline DetectResult cmd_detect(const std::string& snapshot_path, const std::string& config_path,
                               const std::vector<std::string>& overrides) {
  DetectResult r;
  try {
    Json doc = config_path.empty() ? Json{{"schema_version", kSchemaVersion}, {"scenario", {{"kind", "sphere"}}}}
                                   : read_config_document(config_path);
    for (const auto& o : overrides) apply_override(doc, o);
    const RunConfig cfg = parse_config(doc);
    const Dimension dim = cfg.dim();
    FlowState st = make_state({read_snapshot(snapshot_path)});
    const NodeFields f = evaluate_nodes(*st.components.begin()->second, dim);
    if (f.first_bad) throw InvalidArgument("snapshot is not 2-convex");
    NeckParams p = cfg.neck;
    p.theta = 0.0;
    if (!cfg.neck_g0_set) p.g0 = 0.5 * f.max_g();
    r.necks = detect(st, p, st.log, dim);
  } catch (const Error& e) {
    r.exit_code = exit_code::kConfig;
    r.message = e.what();
    return r;
  }
  r.exit_code = r.necks.empty() ? exit_code::kNoNeck : exit_code::kOk;
  return r;
}

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/// "a.b=1,2,3" -> key a.b with three values. Bracketed or quoted values are
/// kept whole.
inline SweepAxis parse_sweep_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(text, "override must look like KEY=VALUE[,VALUE...]");
  SweepAxis a{text.substr(0, eq), {}};
  const std::string rhs = text.substr(eq + 1);
  if (!rhs.empty() && (rhs.front() == '[' || rhs.front() == '{' || rhs.front() == '"')) {
    a.values.push_back(rhs);
  } else {
    std::stringstream ss(rhs);
    std::string v;
    while (std::getline(ss, v, ',')) a.values.push_back(v);
    if (a.values.empty()) a.values.push_back("");
  }
  return a;
}

struct SweepCell {
  std::vector<std::string> overrides;
  std::filesystem::path out;
  RunResult result;
};

inline std::vector<std::vector<std::string>> cartesian(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<std::string>> cells{{}};
  for (const auto& a : axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& c : cells) {
      for (const auto& v : a.values) {
        auto d = c;
        d.push_back(a.key + "=" + v);
        next.push_back(std::move(d));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

/// Runs every combination of the listed values, each in its own directory.
/// With no axes this is a single run into `out` itself.
inline std::vector<SweepCell> cmd_sweep(const std::string& config_path, const std::vector<std::string>& axes_text,
                                        const std::filesystem::path& out, unsigned max_threads = 0) {
  std::vector<SweepAxis> axes;
  for (const auto& t : axes_text) axes.push_back(parse_sweep_axis(t));
  std::vector<SweepCell> cells;
  const auto combos = cartesian(axes);
  for (std::size_t k = 0; k < combos.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "cell_%03zu", k);
    cells.push_back({combos[k], axes.empty() ? out : out / name, {}});
  }
  if (max_threads == 0) max_threads = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      cells[k].result = cmd_run(config_path, cells[k].overrides, cells[k].out);
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = std::min<unsigned>(max_threads, static_cast<unsigned>(cells.size()));
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return cells;
}

}  // namespace gflow
