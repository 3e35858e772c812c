#pragma once

// Explicit time integration of dF/dt = -G nu on axisymmetric profiles.

#include <algorithm>
#include <array>
#include <map>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "gflow/curvature.hpp"
#include "gflow/errors.hpp"
#include "gflow/profile.hpp"
#include "gflow/state.hpp"

namespace gflow {

struct StepControl {
  double cfl = 0.1;
  double dt_max = 1e-2;
  double spacing = 1e-2;
  double resample_drift = 0.25;

  void validate() const {
    if (!(cfl > 0.0 && cfl <= 0.5)) throw InvalidArgument("cfl must lie in (0, 0.5]");
    if (!(dt_max > 0.0)) throw InvalidArgument("dt_max must be positive");
    if (!(spacing > 0.0)) throw InvalidArgument("spacing must be positive");
    if (!(resample_drift > 0.0)) throw InvalidArgument("resample_drift must be positive");
  }
};

/// dt = min(dt_max, cfl h_min^2, cfl / max_g^2).
inline double select_dt(double max_g, double h_min, const StepControl& ctl) {
  double dt = std::min(ctl.dt_max, ctl.cfl * h_min * h_min);
  if (max_g > 0.0) dt = std::min(dt, ctl.cfl / (max_g * max_g));
  return dt;
}

struct StepInfo {
  double dt = 0.0;
  bool resampled = false;
};

/// Largest speed over all components; throws LostTwoConvexity on the first
/// node found outside the two-convex cone.
inline double max_speed(const FlowState& st, Dimension dim) {
  double g = 0.0;
  for (const auto& [id, c] : st.components) {
    const NodeFields f = evaluate_nodes(*c, dim);
    if (f.first_bad) throw LostTwoConvexity(id, c->s()[*f.first_bad], st.t);
    g = std::max(g, f.max_g());
  }
  return g;
}

/// Advances every component by one forward-Euler step and records a snapshot.
inline StepInfo step(FlowState& st, const StepControl& ctl, Dimension dim) {
  ctl.validate();
  if (st.components.empty()) throw InvalidArgument("cannot step a state without components");

  std::map<ComponentId, NodeFields> fields;
  double max_g = 0.0;
  double h_min = std::numeric_limits<double>::infinity();
  for (const auto& [id, c] : st.components) {
    NodeFields f = evaluate_nodes(*c, dim);
    if (f.first_bad) throw LostTwoConvexity(id, c->s()[*f.first_bad], st.t);
    max_g = std::max(max_g, f.max_g());
    h_min = std::min(h_min, c->min_spacing());
    fields.emplace(id, std::move(f));
  }
  const double dt = select_dt(max_g, h_min, ctl);
  if (!(dt >= 1e-14)) {
    throw TimeStepUnderflow("time step " + std::to_string(dt) + " below 1e-14 at t=" + std::to_string(st.t));
  }

  StepInfo info;
  info.dt = dt;
  std::map<ComponentId, CurvePtr> next;
  for (const auto& [id, cp] : st.components) {
    const ProfileCurve& c = *cp;
    const NodeFields& f = fields.at(id);
    const std::size_t m = c.size();
    std::vector<double> x(m), u(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double g = f.g[i];
      const double ph = c.phi()[i];
      const bool first = i == 0;
      const bool last = i + 1 == m;
      if ((first && c.pole_start()) || (last && c.pole_end())) {
        x[i] = c.x()[i] + (first ? g : -g) * dt;
        u[i] = 0.0;
      } else if ((first || last) && !c.is_pole(i)) {
        // Mirror end: the node stays on its symmetry plane.
        x[i] = c.x()[i];
        u[i] = c.u()[i] - g * std::cos(ph) * dt;
      } else {
        x[i] = c.x()[i] + g * std::sin(ph) * dt;
        u[i] = c.u()[i] - g * std::cos(ph) * dt;
      }
      if (!std::isfinite(x[i]) || !std::isfinite(u[i])) {
        throw NumericalFailure("non-finite node on component " + std::to_string(id) + " at t=" +
                               std::to_string(st.t));
      }
      if (!c.is_pole(i) && !(u[i] > 0.0)) {
        throw NumericalFailure("radius collapsed at node " + std::to_string(i) + " of component " +
                               std::to_string(id) + " at t=" + std::to_string(st.t));
      }
    }
    ProfileCurve moved = [&] {
      try {
        return ProfileCurve(std::move(x), std::move(u), c.start_kind(), c.end_kind());
      } catch (const DegenerateRadius& e) {
        throw NumericalFailure(e.what());
      }
    }();

    double drift = 0.0;
    for (std::size_t i = 1; i < moved.size(); ++i) {
      drift = std::max(drift, std::abs((moved.s()[i] - moved.s()[i - 1]) / ctl.spacing - 1.0));
    }
    if (drift > ctl.resample_drift) {
      next[id] = std::make_shared<const ProfileCurve>(resample(moved, ctl.spacing));
      ++st.node_epoch[id];
      info.resampled = true;
    } else {
      next[id] = std::make_shared<const ProfileCurve>(std::move(moved));
    }
  }
  st.components = std::move(next);
  st.t += dt;
  ++st.step;
  st.record();
  return info;
}

struct StopAtTime {
  double t_end;
};
struct StopAtMaxG {
  double g;
};
struct StopAtMinRadius {
  double r;
};
using StopCondition = std::variant<StopAtTime, StopAtMaxG, StopAtMinRadius>;

enum class StopReason { TimeReached, MaxGReached, MinRadiusReached, NoComponents };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::TimeReached: return "t_end";
    case StopReason::MaxGReached: return "max_g_reaches";
    case StopReason::MinRadiusReached: return "min_radius_below";
    case StopReason::NoComponents: return "no_components";
  }
  return "unknown";
}

/// Smallest over components of the component's largest radius.
inline double min_component_radius(const FlowState& st) {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& [id, c] : st.components) r = std::min(r, c->max_u());
  return r;
}

using StepObserver = std::function<void(const FlowState&, const StepInfo&)>;

/// Steps until the stop condition holds. The condition is tested before every
/// step, so a condition already true returns without stepping.
inline StopReason run_until(FlowState& st, const StepControl& ctl, Dimension dim, const StopCondition& stop,
                            const StepObserver& observer = {}) {
  ctl.validate();
  for (;;) {
    if (st.components.empty()) return StopReason::NoComponents;
    StepControl local = ctl;
    if (const auto* s = std::get_if<StopAtTime>(&stop)) {
      const double remaining = s->t_end - st.t;
      if (remaining <= 1e-14 * std::max(1.0, std::abs(s->t_end))) return StopReason::TimeReached;
      local.dt_max = std::min(local.dt_max, remaining);
    } else if (const auto* g = std::get_if<StopAtMaxG>(&stop)) {
      if (max_speed(st, dim) >= g->g) return StopReason::MaxGReached;
    } else if (const auto* r = std::get_if<StopAtMinRadius>(&stop)) {
      if (min_component_radius(st) < r->r) return StopReason::MinRadiusReached;
    }
    const StepInfo info = step(st, local, dim);
    if (observer) observer(st, info);
  }
}

struct IdentityResiduals {
  double max_r1 = 0.0;       // max |dH/dt - (Laplacian G + |A|^2 G)| over interior nodes
  double area_rate = 0.0;    // dA/dt
  double gh_integral = 0.0;  // integral of G H dmu
  double r2 = 0.0;           // dA/dt + integral of G H dmu
  double rel_r2 = 0.0;       // |r2| / integral of G H dmu
  double t = 0.0;            // time at which the residuals are evaluated
};

namespace detail {

// Weights of the 3-point derivative at the middle of nonuniform points.
inline std::array<double, 3> middle_weights(double a, double b, double c) {
  const double h1 = b - a;
  const double h2 = c - b;
  return {-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))};
}

inline double integral_gh(const ProfileCurve& c, const NodeFields& f, Dimension dim) {
  const int p = dim.value() - 1;
  double acc = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double a = f.g[i - 1] * f.h[i - 1] * std::pow(c.u()[i - 1], p);
    const double b = f.g[i] * f.h[i] * std::pow(c.u()[i], p);
    acc += 0.5 * (a + b) * (c.s()[i] - c.s()[i - 1]);
  }
  return dim.unit_sphere_area() * acc;
}

}  // namespace detail

/// Surface Laplacian f_ss + (n-1) (u_s / u) f_s on the nodes; n f_ss at poles.
inline std::vector<double> surface_laplacian(const ProfileCurve& c, const std::vector<double>& f, Dimension dim) {
  const std::size_t m = c.size();
  const auto& s = c.s();
  const double n = dim.as_double();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double fs, fss;
    if (i == 0 || i + 1 == m) {
      // Reflection symmetry at either end kind makes f even about the end.
      const std::size_t j = (i == 0) ? 1 : m - 2;
      const double h = std::abs(s[j] - s[i]);
      fs = 0.0;
      fss = 2.0 * (f[j] - f[i]) / (h * h);
    } else {
      const double h1 = s[i] - s[i - 1];
      const double h2 = s[i + 1] - s[i];
      const auto w = detail::middle_weights(s[i - 1], s[i], s[i + 1]);
      fs = w[0] * f[i - 1] + w[1] * f[i] + w[2] * f[i + 1];
      fss = 2.0 * (h1 * f[i + 1] - (h1 + h2) * f[i] + h2 * f[i - 1]) / (h1 * h2 * (h1 + h2));
    }
    out[i] = c.is_pole(i) ? n * fss : fss + (n - 1.0) * std::sin(c.phi()[i]) / c.u()[i] * fs;
  }
  return out;
}

/// Residuals of dH/dt = Laplacian G + |A|^2 G and dA/dt = -integral G H dmu,
/// from the three most recent consecutive snapshots.
inline IdentityResiduals verify_evolution_identities(const FlowState& st, Dimension dim) {
  const auto& rec = st.history.recent();
  if (rec.size() < 3) throw InsufficientHistory("need 3 consecutive snapshots");
  const Snapshot& a = rec[rec.size() - 3];
  const Snapshot& b = rec[rec.size() - 2];
  const Snapshot& c = rec[rec.size() - 1];
  if (a.surgery_epoch != c.surgery_epoch || c.step - a.step != 2) {
    throw InsufficientHistory("the recent snapshots straddle a surgery or are not consecutive");
  }
  const auto w = detail::middle_weights(a.t, b.t, c.t);
  const double n = dim.as_double();

  IdentityResiduals r;
  r.t = b.t;
  double area[3] = {0.0, 0.0, 0.0};
  bool any = false;
  for (const auto& [id, cb] : b.components) {
    auto ia = a.components.find(id);
    auto ic = c.components.find(id);
    if (ia == a.components.end() || ic == c.components.end()) continue;
    if (a.node_epoch.at(id) != c.node_epoch.at(id)) continue;
    any = true;
    const ProfileCurve& A = *ia->second;
    const ProfileCurve& B = *cb;
    const ProfileCurve& C = *ic->second;
    const NodeFields fa = evaluate_nodes(A, dim);
    const NodeFields fb = evaluate_nodes(B, dim);
    const NodeFields fc = evaluate_nodes(C, dim);
    const std::vector<double> lap = surface_laplacian(B, fb.g, dim);
    for (std::size_t i = 1; i + 1 < B.size(); ++i) {
      const double dh = w[0] * fa.h[i] + w[1] * fb.h[i] + w[2] * fc.h[i];
      const double lp = B.lambda_profile()[i];
      const double lr = B.lambda_rot()[i];
      const double a2 = lp * lp + (n - 1.0) * lr * lr;
      r.max_r1 = std::max(r.max_r1, std::abs(dh - (lap[i] + a2 * fb.g[i])));
    }
    area[0] += total_area(A, dim);
    area[1] += total_area(B, dim);
    area[2] += total_area(C, dim);
    r.gh_integral += detail::integral_gh(B, fb, dim);
  }
  if (!any) throw InsufficientHistory("no component keeps its nodes across the last 3 snapshots");
  r.area_rate = w[0] * area[0] + w[1] * area[1] + w[2] * area[2];
  r.r2 = r.area_rate + r.gh_integral;
  r.rel_r2 = std::abs(r.r2) / std::abs(r.gh_integral);
  return r;
}

/// Exact radius of a round sphere or cylinder moving by the flow.
inline double oracle_radius(const ModelSurface& model, double r0, Dimension dim, double t) {
  if (!(r0 > 0.0)) throw InvalidArgument("initial radius must be positive");
  const double n = dim.as_double();
  const double c = std::holds_alternative<Sphere>(model) ? 8.0 / (n * (n - 1.0)) : 8.0 / ((n - 1.0) * (n + 2.0));
  const double r2 = r0 * r0 - c * t;
  if (!(r2 > 0.0)) throw PastExtinction("t=" + std::to_string(t) + " is at or past extinction");
  return std::sqrt(r2);
}

/// Extinction time of the model surface.
inline double extinction_time(const ModelSurface& model, double r0, Dimension dim) {
  const double n = dim.as_double();
  const double c = std::holds_alternative<Sphere>(model) ? 8.0 / (n * (n - 1.0)) : 8.0 / ((n - 1.0) * (n + 2.0));
  return r0 * r0 / c;
}

/// Half the pole-to-pole distance of a closed component.
inline double sphere_radius(const ProfileCurve& c) { return 0.5 * (c.x().back() - c.x().front()); }

/// Arclength-weighted mean radius.
inline double mean_radius(const ProfileCurve& c) {
  double acc = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i)
    acc += 0.5 * (c.u()[i] + c.u()[i - 1]) * (c.s()[i] - c.s()[i - 1]);
  return acc / c.length();
}

}  // namespace gflow
