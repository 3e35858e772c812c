#pragma once

// The acceptance suite: model oracles, kernel property sweeps and end-to-end
// checks on the dumbbell and three-bulb runs.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "gflow/config.hpp"
#include "gflow/driver.hpp"
#include "gflow/flow.hpp"
#include "gflow/monitor.hpp"
#include "gflow/neck.hpp"
#include "gflow/presets.hpp"
#include "gflow/surgery.hpp"

namespace gflow {

struct CheckResult {
  int id = 0;
  std::string name;
  std::string expected;
  std::string actual;
  std::string tolerance;
  bool pass = false;
};

struct ValidationOptions {
  std::vector<std::string> overrides;
  std::ostream* progress = nullptr;
  std::filesystem::path scratch;  // defaults to a directory under the system temp dir
};

namespace validation {

inline std::string fmt(double v, const char* f = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline Json base_doc(const char* scenario) {
  Json d = {{"schema_version", kSchemaVersion}, {"dimension", 3}, {"seed", 1}, {"step", {{"spacing", 1e-2}}}};
  const std::string s = scenario;
  if (s == "sphere") {
    d["scenario"] = {{"kind", "sphere"}, {"r0", 1.0}};
  } else if (s == "cylinder") {
    d["scenario"] = {{"kind", "cylinder"}, {"r0", 1.0}, {"length", 20.0}};
  } else {
    if (s == "dumbbell") {
      d["scenario"] = {{"kind", "dumbbell"}, {"bulb_r", 1.0}, {"waist_r", 0.3}, {"separation", 8.0}};
    } else {
      d["scenario"] = {{"kind", "three_bulb"}, {"bulb_r", 1.0}, {"waists", {0.3, 0.33}}, {"separation", 8.0}};
    }
    d["neck"] = {{"g0", 5.0}};
    d["thresholds"] = {{"g1", 2.5}, {"omega2", 2.0}, {"omega3", 2.0}};
    d["monitor"] = {{"g_threshold", 2.0}};
  }
  return d;
}

inline RunConfig scenario_config(const char* scenario, const std::vector<std::string>& overrides) {
  Json d = base_doc(scenario);
  for (const auto& o : overrides) apply_override(d, o);
  return parse_config(d);
}

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Neck detection with g0 at half the current max G unless it was configured.
inline std::vector<NeckRegion> detect_relative(const FlowState& st, const RunConfig& cfg) {
  NeckParams p = cfg.neck;
  if (!cfg.neck_g0_set) p.g0 = 0.5 * max_speed(st, cfg.dim());
  return detect(st, p, st.log, cfg.dim());
}

// ---- curvature kernel sweeps -------------------------------------------------

struct KernelSweep {
  int samples = 0;
  int grad_out_of_range = 0;
  double worst_fd = 0.0;
  int sandwich_violations = 0;
  std::array<int, 6> violations_by_n{};
  int sharp_violations = 0;  // of the pair bound 2 (l1 + l2) / (n (n - 1)) <= G
  double worst_rational = 0.0;
};

inline KernelSweep kernel_sweep(std::uint64_t seed) {
  KernelSweep k;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lam(-1.0, 3.0);
  std::uniform_real_distribution<double> logscale(-3.0, 3.0);
  for (int n : {3, 4, 5}) {
    const Dimension dim(n);
    int made = 0;
    while (made < 10000 / 3 + (n == 3 ? 10000 % 3 : 0)) {
      std::vector<double> l(static_cast<std::size_t>(n));
      const double sc = std::exp(logscale(rng));
      for (auto& v : l) v = sc * lam(rng);
      const CurvatureSpectrum spec(l);
      if (!(spec.lambda1() + spec[1] > 1e-3 * sc)) continue;
      ++made;
      ++k.samples;
      const double g = speed(spec, dim);
      const auto grad = speed_gradient(spec, dim);
      const double pair = spec.lambda1() + spec[1];
      const std::vector<double> base(spec.values().begin(), spec.values().end());
      auto shifted = [&](std::size_t i, double d) {
        std::vector<double> v = base;
        v[i] += d;
        return detail::speed_unchecked(v);
      };
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(grad[i] > 0.0 && grad[i] <= 1.0)) ++k.grad_out_of_range;
        // Step scaled by the smallest pair sum involving lambda_i.
        double near = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < base.size(); ++j)
          if (j != i) near = std::min(near, base[i] + base[j]);
        const double h = 1e-3 * near;
        const double fd = (8.0 * (shifted(i, h) - shifted(i, -h)) - (shifted(i, 2 * h) - shifted(i, -2 * h))) / (12.0 * h);
        k.worst_fd = std::max(k.worst_fd, std::abs(fd - grad[i]) / std::abs(grad[i]));
      }
      if (!(g >= pair / n && g <= pair)) {
        ++k.sandwich_violations;
        ++k.violations_by_n[static_cast<std::size_t>(n)];
      }
      if (!(g >= 2.0 * pair / (n * (n - 1.0)))) ++k.sharp_violations;
      const double rf = speed_rational_form(spec, dim);
      k.worst_rational = std::max(k.worst_rational, std::abs(rf - g) / g);
    }
  }
  return k;
}

// ---- model runs -----------------------------------------------------------------

struct ModelRun {
  std::string error;
  double worst_err = 0.0;
  double t_reached = 0.0;
  int detect_calls = 0;
  int regions = 0;
  int certified = 0;
  int uncertified = 0;
  double seconds = 0.0;
};

inline ModelRun sphere_run(const RunConfig& cfg0) {
  ModelRun r;
  const auto t0 = Clock::now();
  RunConfig cfg = cfg0;
  try {
    FlowState st = prepare_run(cfg);
    const Dimension dim = cfg.dim();
    const double r0 = std::get<SphereScenario>(cfg.scenario).r0;
    const double t_end = 0.9 * extinction_time(Sphere{}, r0, dim);
    run_until(st, cfg.step, dim, StopAtTime{t_end}, [&](const FlowState& s, const StepInfo&) {
      const double want = oracle_radius(Sphere{}, r0, dim, s.t);
      r.worst_err = std::max(r.worst_err, std::abs(sphere_radius(s.curve(s.components.begin()->first)) - want) / want);
      if (s.step % 100 == 0) {
        ++r.detect_calls;
        for (const auto& n : detect_relative(s, cfg)) {
          ++r.regions;
          if (n.certified_shrinking) ++r.certified;
        }
      }
    });
    r.t_reached = st.t;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = seconds_since(t0);
  return r;
}

inline ModelRun cylinder_run(const RunConfig& cfg0) {
  ModelRun r;
  const auto t0 = Clock::now();
  RunConfig cfg = cfg0;
  try {
    FlowState st = prepare_run(cfg);
    const Dimension dim = cfg.dim();
    const double r0 = std::get<CylinderScenario>(cfg.scenario).r0;
    const double t_end = 0.9 * extinction_time(Cylinder{}, r0, dim);
    std::vector<double> probes{0.4 * t_end, 0.7 * t_end, 0.95 * t_end};
    std::size_t next = 0;
    run_until(st, cfg.step, dim, StopAtTime{t_end}, [&](const FlowState& s, const StepInfo&) {
      const double want = oracle_radius(Cylinder{}, r0, dim, s.t);
      r.worst_err = std::max(r.worst_err, std::abs(mean_radius(s.curve(s.components.begin()->first)) - want) / want);
      if (next < probes.size() && s.t >= probes[next]) {
        ++next;
        ++r.detect_calls;
        for (const auto& n : detect_relative(s, cfg)) {
          ++r.regions;
          if (n.certified_shrinking) {
            ++r.certified;
          } else {
            ++r.uncertified;
          }
        }
      }
    });
    r.t_reached = st.t;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = seconds_since(t0);
  return r;
}

struct IdentityRun {
  std::string error;
  double r1_coarse = 0.0;
  double r1_fine = 0.0;
  double worst_rel_r2 = 0.0;
};

inline IdentityRun identity_run(const RunConfig& cfg) {
  IdentityRun r;
  try {
    const Dimension dim = cfg.dim();
    for (double h : {2e-2, 1e-2}) {
      StepControl ctl = cfg.step;
      ctl.spacing = h;
      FlowState st = make_state({sphere_profile(1.0, h)});
      step(st, ctl, dim);
      step(st, ctl, dim);
      const IdentityResiduals res = verify_evolution_identities(st, dim);
      (h > 1.5e-2 ? r.r1_coarse : r.r1_fine) = res.max_r1;
      r.worst_rel_r2 = std::max(r.worst_rel_r2, res.rel_r2);
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

// ---- dumbbell and three-bulb runs --------------------------------------------------

struct LoopAnalysis {
  std::string error;
  RunResult result;
  TerminationReport report;
  double seconds = 0.0;
  double trigger_t = -1.0;

  // smooth phase, sampled on a time grid before the first trigger
  int scans = 0;
  double last_h_over_g = std::numeric_limits<double>::quiet_NaN();
  int decade_scans = 0;
  int decade_nonempty = 0;
  double worst_l1_over_g = std::numeric_limits<double>::infinity();
  std::vector<double> grad_ratios, time_ratios;
  int control_pairs = 0;
  int control_violations = 0;
  int control_samples = 0;

  // neck detection before the trigger
  int certified_good = 0;
  double best_rdev = 0.0, best_adev = 0.0;

  // after surgeries
  std::vector<SurgeryRecord> records;
  std::vector<ComponentId> removed;  // neck pieces cut out, awaiting discard
  int post_certified = 0;
  int post_intersections = 0;
  int window_pairs = 0;
  int window_hits = 0;
};

inline double measured_c_sharp(const LoopAnalysis& a) {
  double c = 0.0;
  for (double v : a.grad_ratios) c = std::max(c, v);
  return c;
}

// Checks that no logged surgery falls in the guaranteed window around nodes
// with G >= 2K.
inline void window_check(const FlowState& st, double c_sharp, double k, Dimension dim, LoopAnalysis& a) {
  if (st.log.empty() || !(c_sharp > 0.0)) return;
  const double radius = 1.0 / (8.0 * c_sharp * k);
  const double duration = 1.0 / (8.0 * c_sharp * k * k);
  for (const auto& [id, cp] : st.components) {
    if (std::find(a.removed.begin(), a.removed.end(), id) != a.removed.end()) continue;
    const ProfileCurve& c = *cp;
    const NodeFields f = evaluate_nodes(c, dim);
    if (f.first_bad) continue;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (f.g[i] < 2.0 * k) continue;
      ++a.window_pairs;
      const AxialInterval zone{c.x()[i] - radius, c.x()[i] + radius};
      for (const auto& r : st.log.records()) {
        if (r.time >= st.t - duration && r.time <= st.t && r.modified_interval.intersects(zone)) ++a.window_hits;
      }
    }
  }
}

inline void post_surgery_necks(const FlowState& st, const RunConfig& cfg, const SurgeryRecord& rec, LoopAnalysis& a) {
  const Dimension dim = cfg.dim();
  for (const auto& n : detect(st, cfg.neck, st.log, dim)) {
    if (!n.certified_shrinking) continue;
    ++a.post_certified;
    const ParabolicNbhd nb = build_nbhd(st, SurfacePointRef{n.component_id, n.center_s}, cfg.neck, dim);
    if (nb.axial.intersects(rec.modified_interval)) ++a.post_intersections;
  }
}

/// Runs a surgery scenario through the driver and gathers the measurements
/// the end-to-end checks need. `c_sharp` is the constant for the window check
/// after surgeries; 0 means measure it from this run.
inline LoopAnalysis analyse_loop(const RunConfig& cfg0, const std::filesystem::path& out, double c_sharp,
                                 bool smooth_phase) {
  LoopAnalysis a;
  const auto t0 = Clock::now();
  RunConfig cfg = cfg0;
  try {
    prepare_run(cfg);
  } catch (const std::exception& e) {
    a.error = e.what();
    return a;
  }
  const Dimension dim = cfg.dim();
  const double k = cfg.thresholds().k_star();
  const double gamma = 2.0;
  MonitorConfig mon = cfg.monitor;
  std::mt19937_64 rng(cfg.seed);
  bool triggered = false;
  // Sampled on a time grid so the sample count does not depend on the step size.
  constexpr double kScanInterval = 2.5e-4;
  double next_scan = kScanInterval;

  LoopObserver obs;
  obs.on_step = [&](const FlowState& st, const StepInfo&) {
    if (triggered || !smooth_phase || st.t < next_scan) return;
    while (next_scan <= st.t) next_scan += kScanInterval;
    const EstimateSnapshot e = scan(st, mon, dim);
    ++a.scans;
    if (e.grad_ratio) a.grad_ratios.push_back(*e.grad_ratio);
    if (e.time_ratio) a.time_ratios.push_back(*e.time_ratio);

    const auto& [id, cp] = *st.components.begin();
    const ProfileCurve& c = *cp;
    const NodeFields f = evaluate_nodes(c, dim);
    const std::size_t peak = f.argmax_g();
    a.last_h_over_g = f.h[peak] / f.g[peak];

    if (e.max_g >= cfg.g3 / 10.0) {
      ++a.decade_scans;
      const double med = median(f.g);
      bool any = false;
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (f.g[i] < 10.0 * med) continue;
        any = true;
        a.worst_l1_over_g = std::min(a.worst_l1_over_g, f.lambda1[i] / f.g[i]);
      }
      if (any) ++a.decade_nonempty;
    }

    if (a.control_pairs < 100 && e.grad_ratio && f.g[peak] >= gamma * mon.g_threshold) {
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < c.size(); ++i)
        if (f.g[i] >= gamma * mon.g_threshold) eligible.push_back(i);
      std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
      for (std::size_t p0 : {peak, eligible[pick(rng)], eligible[pick(rng)]}) {
        if (a.control_pairs >= 100) break;
        const auto rep = curvature_control_check(st, id, c.s()[p0], gamma, *e.grad_ratio, mon, dim);
        ++a.control_pairs;
        a.control_samples += rep.samples;
        a.control_violations += rep.violations;
      }
    }
  };
  obs.on_necks = [&](const FlowState&, const std::vector<NeckRegion>& necks) {
    if (triggered) return;
    for (const auto& n : necks) {
      if (n.certified_shrinking && n.radius_deviation <= 0.1 && n.axis_deviation <= 0.1) {
        if (a.certified_good == 0) {
          a.best_rdev = n.radius_deviation;
          a.best_adev = n.axis_deviation;
        }
        ++a.certified_good;
      }
    }
  };
  obs.on_trigger = [&](const FlowState& st) {
    if (!triggered) a.trigger_t = st.t;
    triggered = true;
    const double cs = c_sharp > 0.0 ? c_sharp : measured_c_sharp(a);
    window_check(st, cs, k, dim, a);
  };
  obs.on_surgery = [&](const FlowState& st, const PerformResult& p) {
    a.records.push_back(p.record);
    a.removed.push_back(p.removed);
    post_surgery_necks(st, cfg, p.record, a);
    const double cs = c_sharp > 0.0 ? c_sharp : measured_c_sharp(a);
    window_check(st, cs, k, dim, a);
  };
  try {
    a.result = run_config(cfg0, out, obs);
    if (a.result.exit_code != exit_code::kOk) a.error = a.result.message;
  } catch (const std::exception& e) {
    a.error = e.what();
  }
  a.seconds = seconds_since(t0);
  return a;
}

inline bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  return !sa.empty() && sa == sb;
}

inline std::string err_or(const std::string& error, const std::string& value) {
  return error.empty() ? value : "error: " + error;
}

}  // namespace validation

/// Runs every acceptance check; overrides apply to each scenario's config.
inline std::vector<CheckResult> run_validation(const ValidationOptions& opt = {}) {
  using namespace validation;
  std::vector<CheckResult> out;
  auto note = [&](const std::string& what) {
    if (opt.progress) *opt.progress << "  ... " << what << std::endl;
  };
  auto add = [&](int id, std::string name, std::string expected, std::string actual, std::string tol, bool pass) {
    out.push_back({id, std::move(name), std::move(expected), std::move(actual), std::move(tol), pass});
  };

  RunConfig sphere_cfg, cylinder_cfg, dumbbell_cfg, three_cfg;
  std::string config_error;
  try {
    sphere_cfg = scenario_config("sphere", opt.overrides);
    cylinder_cfg = scenario_config("cylinder", opt.overrides);
    dumbbell_cfg = scenario_config("dumbbell", opt.overrides);
    three_cfg = scenario_config("three_bulb", opt.overrides);
  } catch (const std::exception& e) {
    config_error = e.what();
  }
  if (!config_error.empty()) {
    for (int id = 1; id <= 17; ++id) add(id, "configuration", "valid", "error: " + config_error, "-", false);
    return out;
  }
  const Dimension d3(3);

  // 1
  {
    const double g = speed(CurvatureSpectrum{0.0, 0.5, 0.5}, d3);
    add(1, "cylinder speed constant", "0.2", fmt(g, "%.17g"), "1e-12", std::abs(g - 0.2) <= 1e-12);
  }
  // 2
  {
    std::string actual;
    bool pass = false;
    try {
      const SliceMaximum m = maximize_on_cylinder_slice(d3, 1e-8);
      double brute = 0.0;
      for (int i = 1; i < 10000; ++i) {
        const double a = i * 1e-4;
        brute = std::max(brute, speed(CurvatureSpectrum{0.0, a, 1.0 - a}, d3));
      }
      const double arg_err = std::max(std::abs(m.argmax[0] - 0.5), std::abs(m.argmax[1] - 0.5));
      pass = arg_err <= 1e-6 && std::abs(m.max_value - 0.2) <= 1e-8 && brute <= m.max_value + 1e-15;
      actual = "argmax (" + fmt(m.argmax[0], "%.9f") + ", " + fmt(m.argmax[1], "%.9f") + ") max " +
               fmt(m.max_value, "%.12g") + " brute " + fmt(brute, "%.12g");
    } catch (const std::exception& e) {
      actual = std::string("error: ") + e.what();
    }
    add(2, "simplex maximization", "argmax (1/2,1/2), max 1/5, brute <= max", actual, "1e-6 / 1e-8", pass);
  }
  // 3-5
  {
    note("kernel sweep");
    const KernelSweep k = kernel_sweep(sphere_cfg.seed);
    add(3, "speed gradient in (0,1]", "0 out of range, fd rel <= 1e-6",
        std::to_string(k.grad_out_of_range) + " out of range over " + std::to_string(k.samples) + ", fd rel " +
            fmt(k.worst_fd, "%.3g"),
        "1e-6", k.samples >= 10000 && k.grad_out_of_range == 0 && k.worst_fd <= 1e-6);
    add(4, "sandwich bound", "0 violations",
        std::to_string(k.sandwich_violations) + " violations (n=3: " + std::to_string(k.violations_by_n[3]) +
            ", n=4: " + std::to_string(k.violations_by_n[4]) + ", n=5: " + std::to_string(k.violations_by_n[5]) +
            "); 2(l1+l2)/(n(n-1)) <= G: " + std::to_string(k.sharp_violations) + " violations",
        "exact",
        k.samples >= 10000 && k.sandwich_violations == 0);
    add(5, "rational form equivalence", "rel diff <= 1e-12", "rel diff " + fmt(k.worst_rational, "%.3g"), "1e-12",
        k.samples >= 10000 && k.worst_rational <= 1e-12);
  }
  // 6
  note("sphere run");
  const ModelRun sph = sphere_run(sphere_cfg);
  add(6, "sphere oracle", "rel err <= 1e-3 to t=0.675",
      err_or(sph.error, "rel err " + fmt(sph.worst_err, "%.3g") + " to t=" + fmt(sph.t_reached, "%.6g") + " in " +
                            fmt(sph.seconds, "%.1f") + " s"),
      "1e-3, < 30 s",
      sph.error.empty() && sph.worst_err <= 1e-3 && sph.t_reached >= 0.675 - 1e-12 && sph.seconds < 30.0);
  // 7
  note("cylinder run");
  const ModelRun cyl = cylinder_run(cylinder_cfg);
  add(7, "cylinder oracle", "rel err <= 1e-3 to t=1.125",
      err_or(cyl.error, "rel err " + fmt(cyl.worst_err, "%.3g") + " to t=" + fmt(cyl.t_reached, "%.6g") + " in " +
                            fmt(cyl.seconds, "%.1f") + " s"),
      "1e-3, < 30 s",
      cyl.error.empty() && cyl.worst_err <= 1e-3 && cyl.t_reached >= 1.125 - 1e-12 && cyl.seconds < 30.0);
  // 8
  {
    note("evolution identities");
    const IdentityRun idr = identity_run(sphere_cfg);
    const double ratio = idr.r1_coarse / idr.r1_fine;
    add(8, "evolution identity residual", "halving spacing shrinks residual >= 3x; area rel <= 1e-2",
        err_or(idr.error, "r1 " + fmt(idr.r1_coarse, "%.3g") + " -> " + fmt(idr.r1_fine, "%.3g") + " (x" +
                              fmt(ratio, "%.2f") + "), area rel " + fmt(idr.worst_rel_r2, "%.3g")),
        "3x / 1e-2", idr.error.empty() && ratio >= 3.0 && idr.worst_rel_r2 <= 1e-2);
  }

  // 9-15, 17
  std::filesystem::path scratch = opt.scratch;
  if (scratch.empty()) {
    scratch = std::filesystem::temp_directory_path() / ("gflow_validate_" + std::to_string(::getpid()));
  }
  note("dumbbell run");
  const LoopAnalysis db = analyse_loop(dumbbell_cfg, scratch / "dumbbell_a", 0.0, true);
  const double c_sharp = measured_c_sharp(db);
  note("three-bulb run");
  const LoopAnalysis tb = analyse_loop(three_cfg, scratch / "three_bulb", c_sharp, false);
  {
    const bool ok = db.error.empty() && db.trigger_t > 0.0 && std::abs(db.last_h_over_g - 5.0) <= 0.5;
    add(9, "cylindrical estimate at the waist", "H/G = 5 before trigger",
        err_or(db.error, "H/G " + fmt(db.last_h_over_g) + " at t=" + fmt(db.trigger_t)), "0.5", ok);
  }
  {
    const bool ok = db.error.empty() && db.decade_nonempty > 0 && db.worst_l1_over_g >= -0.1;
    add(10, "convexity estimate trend", "min l1/G >= -0.1 on {G >= 10 median}",
        err_or(db.error, "min l1/G " + fmt(db.worst_l1_over_g) + " over " + std::to_string(db.decade_nonempty) + "/" +
                             std::to_string(db.decade_scans) + " scans"),
        "-0.1", ok);
  }
  {
    double gmax = 0.0, tmax = 0.0;
    for (double v : db.grad_ratios) gmax = std::max(gmax, v);
    for (double v : db.time_ratios) tmax = std::max(tmax, v);
    const double gmed = median(db.grad_ratios), tmed = median(db.time_ratios);
    const bool ok = db.error.empty() && !db.grad_ratios.empty() && !db.time_ratios.empty() && std::isfinite(gmax) &&
                    std::isfinite(tmax) && gmax <= 10.0 * gmed && tmax <= 10.0 * tmed;
    add(11, "gradient estimate boundedness", "sup <= 10 median",
        err_or(db.error, "grad sup/med " + fmt(gmax) + "/" + fmt(gmed) + ", time sup/med " + fmt(tmax) + "/" +
                             fmt(tmed)),
        "10x", ok);
  }
  {
    const bool ok = db.error.empty() && db.control_pairs >= 100 && db.control_violations == 0;
    add(12, "curvature control", "0 violations at 100 pairs",
        err_or(db.error, std::to_string(db.control_violations) + " violations, " + std::to_string(db.control_pairs) +
                             " pairs, " + std::to_string(db.control_samples) + " nodes, c# <= " + fmt(c_sharp)),
        "exact", ok);
  }
  {
    const bool cyl_ok = cyl.error.empty() && cyl.regions > 0 && cyl.uncertified == 0;
    const bool ok = db.error.empty() && db.certified_good > 0 && sph.error.empty() && sph.regions == 0 && cyl_ok;
    add(13, "neck detection end to end",
        "dumbbell >= 1 certified before G3; sphere none; cylinder certified",
        "dumbbell " + err_or(db.error, std::to_string(db.certified_good) + " (rdev " + fmt(db.best_rdev, "%.3g") +
                                           ", adev " + fmt(db.best_adev, "%.3g") + ")") +
            "; sphere " + err_or(sph.error, std::to_string(sph.regions)) + "; cylinder " +
            err_or(cyl.error, std::to_string(cyl.certified) + "/" + std::to_string(cyl.regions)),
        "eps 0.1", ok);
  }
  {
    const double kstar = dumbbell_cfg.thresholds().k_star();
    bool caps_ok = !db.records.empty() && !tb.records.empty();
    for (const auto* a : {&db, &tb})
      for (const auto& r : a->records)
        if (!(r.post_max_g >= 0.5 * r.k_star && r.post_max_g <= 2.0 * r.k_star)) caps_ok = false;
    const bool db_ok = db.error.empty() && db.result.surgeries == 1 &&
                       db.result.verdict == to_string(LoopVerdict::AllComponentsSpheres);
    bool post_ok = true;
    for (const auto& r : db.records)
      if (r.post_max_g > dumbbell_cfg.g2) post_ok = false;
    const bool tb_ok = tb.error.empty() && tb.result.surgeries == 2 &&
                       tb.result.verdict == to_string(LoopVerdict::AllComponentsSpheres);
    const double total = db.seconds + tb.seconds;
    std::string cap_range;
    for (const auto* a : {&db, &tb})
      for (const auto& r : a->records) cap_range += (cap_range.empty() ? "" : ",") + fmt(r.post_max_g, "%.3g");
    add(14, "surgery loop",
        "dumbbell 1 surgery, post max G <= G2, all spheres; three-bulb 2 surgeries; caps in [K*/2,2K*]",
        "dumbbell " + err_or(db.error, std::to_string(db.result.surgeries) + " (" + db.result.verdict + ")") +
            "; three-bulb " + err_or(tb.error, std::to_string(tb.result.surgeries) + " (" + tb.result.verdict + ")") +
            "; caps " + cap_range + "; K* " + fmt(kstar) + "; " + fmt(total, "%.1f") + " s",
        "< 600 s", db_ok && post_ok && tb_ok && caps_ok && total < 600.0);
  }
  {
    const int certified = db.post_certified + tb.post_certified;
    const int hits = db.post_intersections + tb.post_intersections + db.window_hits + tb.window_hits;
    const int pairs = db.window_pairs + tb.window_pairs;
    const bool ok = db.error.empty() && tb.error.empty() && hits == 0 && pairs > 0;
    add(15, "surgery bookkeeping", "no overlap with modified intervals",
        std::to_string(db.post_intersections + tb.post_intersections) + "/" + std::to_string(certified) +
            " certified necks overlap; " + std::to_string(db.window_hits + tb.window_hits) + " surgeries in " +
            std::to_string(pairs) + " windows (c# " + fmt(c_sharp) + ")",
        "exact", ok);
  }
  // 16
  {
    std::string actual;
    bool ok = false;
    try {
      const double eta0 = 1.0, cs = 1.0, g_sharp = 0.01;
      const double alpha0 = dichotomy_alpha0(cs, eta0);
      const double gamma0 = dichotomy_gamma0(cs, eta0);
      const double direct_alpha = (std::exp(cs * std::numbers::pi / eta0) - 1.0) / cs;
      const double direct_gamma = 1.0 + cs * direct_alpha;
      const bool formula_ok = std::abs(alpha0 - direct_alpha) <= 1e-12 * direct_alpha &&
                              std::abs(gamma0 - direct_gamma) <= 1e-12 * direct_gamma;

      FlowState sph_st = make_state({sphere_profile(1.0, sphere_cfg.step.spacing)});
      const auto& [sid, sc] = *sph_st.components.begin();
      const DichotomyResult ds = convexity_dichotomy(sph_st, {sid, 0.5 * sc->length()}, eta0, cs, g_sharp, d3);

      RunConfig dcfg = dumbbell_cfg;
      FlowState db_st = prepare_run(dcfg);
      const auto& [did, dc] = *db_st.components.begin();
      const double bulb_x = -0.5 * std::get<DumbbellScenario>(dcfg.scenario).separation;
      std::size_t top = 0;
      for (std::size_t i = 0; i < dc->size(); ++i)
        if (std::abs(dc->x()[i] - bulb_x) < std::abs(dc->x()[top] - bulb_x)) top = i;
      const DichotomyResult dd = convexity_dichotomy(db_st, {did, dc->s()[top]}, eta0, cs, g_sharp, d3);
      ok = formula_ok && ds.outcome == DichotomyOutcome::AllConvex && dd.outcome == DichotomyOutcome::Witness &&
           dd.witness_bound_ok;
      actual = "alpha0 " + fmt(alpha0, "%.12g") + " (direct " + fmt(direct_alpha, "%.12g") + "), gamma0 " +
               fmt(gamma0, "%.12g") + "; sphere " + to_string(ds.outcome) + "; dumbbell " + to_string(dd.outcome) +
               " G(q) " + fmt(dd.g_witness, "%.4g") + " >= " + fmt(dd.g_p / dd.gamma0, "%.4g");
    } catch (const std::exception& e) {
      actual = std::string("error: ") + e.what();
    }
    add(16, "convexity dichotomy", "sphere AllConvex; dumbbell witness G(q) >= G(p)/gamma0; formula", actual,
        "1e-12", ok);
  }
  // 17
  {
    note("dumbbell rerun");
    std::string actual;
    bool ok = false;
    try {
      const RunResult again = run_config(dumbbell_cfg, scratch / "dumbbell_b");
      ok = db.error.empty() && again.exit_code == exit_code::kOk &&
           same_bytes(scratch / "dumbbell_a" / "events.jsonl", scratch / "dumbbell_b" / "events.jsonl");
      actual = ok ? "identical" : "differ (exit " + std::to_string(again.exit_code) + " " + again.message + ")";
    } catch (const std::exception& e) {
      actual = std::string("error: ") + e.what();
    }
    add(17, "determinism", "byte-identical event logs", actual, "exact", ok);
  }
  std::sort(out.begin(), out.end(), [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
  std::error_code ec;
  if (opt.scratch.empty()) std::filesystem::remove_all(scratch, ec);
  return out;
}

inline std::string format_check(const CheckResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "%s %2d %-34s", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str());
  return std::string(head) + " | expected " + r.expected + " | actual " + r.actual + " | tol " + r.tolerance;
}

}  // namespace gflow
