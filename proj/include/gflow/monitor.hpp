#pragma once

// Measured versions of the a priori estimates on a running flow.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gflow/curvature.hpp"
#include "gflow/errors.hpp"
#include "gflow/profile.hpp"
#include "gflow/state.hpp"

namespace gflow {

struct MonitorConfig {
  double g_threshold = 1.0;
  int sample_stride = 1;

  void validate() const {
    if (!(g_threshold > 0.0)) throw InvalidArgument("g_threshold must be positive");
    if (sample_stride < 1) throw InvalidArgument("sample_stride must be positive");
  }
};

/// Ratios are taken over nodes with G >= g_threshold and are absent when that
/// set is empty.
struct EstimateSnapshot {
  double t = 0.0;
  double max_g = 0.0;
  std::optional<double> min_l1_over_g;
  std::optional<double> max_h_over_g;
  std::optional<double> grad_ratio;  // max |dG/ds| / G^2
  std::optional<double> time_ratio;  // max |dG/dt| / G^3
  double area = 0.0;

  friend bool operator==(const EstimateSnapshot&, const EstimateSnapshot&) = default;
};

namespace detail {

inline void keep_min(std::optional<double>& slot, double v) {
  if (!slot || v < *slot) slot = v;
}
inline void keep_max(std::optional<double>& slot, double v) {
  if (!slot || v > *slot) slot = v;
}

}  // namespace detail

/// Per segment |G_{i+1} - G_i| / (ds G_i G_{i+1}), i.e. the slope of 1/G; the
/// segment counts only when both ends are at or above the threshold.
inline std::optional<double> gradient_ratio(const ProfileCurve& c, const NodeFields& f, double threshold) {
  std::optional<double> out;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (f.g[i - 1] < threshold || f.g[i] < threshold) continue;
    const double ds = c.s()[i] - c.s()[i - 1];
    detail::keep_max(out, std::abs(f.g[i] - f.g[i - 1]) / (ds * f.g[i - 1] * f.g[i]));
  }
  return out;
}

inline EstimateSnapshot scan(const FlowState& st, const MonitorConfig& cfg, Dimension dim) {
  cfg.validate();
  EstimateSnapshot e;
  e.t = st.t;
  const auto stride = static_cast<std::size_t>(cfg.sample_stride);
  for (const auto& [id, cp] : st.components) {
    const ProfileCurve& c = *cp;
    const NodeFields f = evaluate_nodes(c, dim);
    if (f.first_bad) throw LostTwoConvexity(id, c.s()[*f.first_bad], st.t);
    e.max_g = std::max(e.max_g, f.max_g());
    e.area += total_area(c, dim);
    for (std::size_t i = 0; i < c.size(); i += stride) {
      if (f.g[i] < cfg.g_threshold) continue;
      detail::keep_min(e.min_l1_over_g, f.lambda1[i] / f.g[i]);
      detail::keep_max(e.max_h_over_g, f.h[i] / f.g[i]);
    }
    if (auto gr = gradient_ratio(c, f, cfg.g_threshold)) detail::keep_max(e.grad_ratio, *gr);
  }

  // Time derivative at matched arclength fraction between the two latest
  // snapshots; the current state is expected to be the latest one.
  const auto& rec = st.history.recent();
  if (rec.size() >= 2) {
    const Snapshot& prev = rec[rec.size() - 2];
    const Snapshot& cur = rec.back();
    const double dt = cur.t - prev.t;
    if (cur.step == st.step && prev.surgery_epoch == cur.surgery_epoch && dt > 0.0) {
      for (const auto& [id, cp] : cur.components) {
        auto ip = prev.components.find(id);
        if (ip == prev.components.end()) continue;
        const ProfileCurve& c = *cp;
        const ProfileCurve& p = *ip->second;
        const NodeFields fc = evaluate_nodes(c, dim);
        const NodeFields fp = evaluate_nodes(p, dim);
        for (std::size_t i = 0; i < c.size(); i += stride) {
          if (fc.g[i] < cfg.g_threshold) continue;
          const double sp = c.s()[i] / c.length() * p.length();
          const double gp = p.interpolate(fp.g, sp);
          const double g = fc.g[i];
          detail::keep_max(e.time_ratio, std::abs(g - gp) / dt / (g * g * g));
        }
      }
    }
  }
  return e;
}

struct CurvatureControlReport {
  double g_p0 = 0.0;
  double radius = 0.0;  // (gamma - 1) / (c_sharp G(p0))
  int samples = 0;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // min of G(q) - bound(q)
};

/// Checks G(q) >= G(p0) / (1 + c_sharp d(p0,q) G(p0)) on every node q with
/// d(p0,q) <= (gamma-1)/(c_sharp G(p0)).
inline CurvatureControlReport curvature_control_check(const FlowState& st, ComponentId comp, double s0,
                                                      double gamma, double c_sharp, const MonitorConfig& cfg,
                                                      Dimension dim) {
  if (!(gamma > 1.0)) throw InvalidArgument("gamma must exceed 1");
  if (!(c_sharp > 0.0)) throw InvalidArgument("c_sharp must be positive");
  const ProfileCurve& c = st.curve(comp);
  CurvatureControlReport r;
  r.g_p0 = speed(curvatures_at(c, s0, dim), dim);
  if (r.g_p0 < gamma * cfg.g_threshold) {
    throw ThresholdNotMet("G(p0)=" + std::to_string(r.g_p0) + " below gamma * g_threshold");
  }
  r.radius = (gamma - 1.0) / (c_sharp * r.g_p0);
  const NodeFields f = evaluate_nodes(c, dim);
  // Roundoff allowance only; the inequality itself is not relaxed.
  const double slack = 1e-12 * r.g_p0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = std::abs(c.s()[i] - s0);
    if (d > r.radius) continue;
    const double bound = r.g_p0 / (1.0 + c_sharp * d * r.g_p0);
    const double margin = f.g[i] - bound;
    ++r.samples;
    r.worst_margin = std::min(r.worst_margin, margin);
    if (margin < -slack) ++r.violations;
  }
  return r;
}

namespace detail {

inline void append_field(std::string& line, const char* name, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "\"%s\":%.17g", name, v);
  if (line.size() > 1) line += ',';
  line += buf;
}

}  // namespace detail

/// One JSON object per line; absent ratios are omitted.
inline std::string to_json_line(const EstimateSnapshot& e) {
  std::string line = "{";
  detail::append_field(line, "t", e.t);
  detail::append_field(line, "max_g", e.max_g);
  if (e.min_l1_over_g) detail::append_field(line, "min_l1_over_g", *e.min_l1_over_g);
  if (e.max_h_over_g) detail::append_field(line, "max_h_over_g", *e.max_h_over_g);
  if (e.grad_ratio) detail::append_field(line, "grad_ratio", *e.grad_ratio);
  if (e.time_ratio) detail::append_field(line, "time_ratio", *e.time_ratio);
  detail::append_field(line, "area", e.area);
  line += "}";
  return line;
}

/// Appends the series to `path`, creating the file if needed.
inline void persist(const std::vector<EstimateSnapshot>& series, const std::string& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot open estimates file " + path);
  for (const auto& e : series) out << to_json_line(e) << '\n';
  if (!out) throw Error("write failed on " + path);
}

}  // namespace gflow
