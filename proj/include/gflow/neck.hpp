#pragma once

// Neck detection: (ND1)/(ND2), backward parabolic neighbourhoods, geometric
// and shrinking certification, and the convexity dichotomy search.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gflow/curvature.hpp"
#include "gflow/errors.hpp"
#include "gflow/profile.hpp"
#include "gflow/state.hpp"

namespace gflow {

struct SurfacePointRef {
  ComponentId component_id = 0;
  double s = 0.0;
};

/// Coefficient c of the shrinking law r(t - tau)^2 = r^2 + c tau for a round
/// cylinder moving by G, 8/((n-1)(n+2)).
inline double derived_rho_coefficient(Dimension dim) {
  const double n = dim.as_double();
  return 8.0 / ((n - 1.0) * (n + 2.0));
}

struct NeckParams {
  double epsilon = 0.1;
  double L = 10.0;
  double theta = 0.1;
  double eta0 = 0.1;
  double g0 = 1.0;
  double rho_coefficient = 0.8;
  int candidate_stride = 4;
  std::optional<double> d_sharp;

  static NeckParams defaults(Dimension dim) {
    NeckParams p;
    p.rho_coefficient = derived_rho_coefficient(dim);
    return p;
  }

  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 0.2)) throw InvalidArgument("epsilon must lie in (0, 0.2]");
    if (!(L >= 10.0)) throw InvalidArgument("L must be at least 10");
    if (!(theta >= 0.0)) throw InvalidArgument("theta must be non-negative");
    if (d_sharp && theta > *d_sharp) throw InvalidArgument("theta must not exceed d_sharp");
    if (!(eta0 > 0.0)) throw InvalidArgument("eta0 must be positive");
    if (!(g0 > 0.0)) throw InvalidArgument("g0 must be positive");
    if (!(rho_coefficient > 0.0)) throw InvalidArgument("rho_coefficient must be positive");
    if (candidate_stride < 1) throw InvalidArgument("candidate_stride must be positive");
  }
};

/// Neighbourhood scale (n-1)(n-2)/(2G).
inline double r_hat(double g, Dimension dim) {
  if (!(g > 0.0)) throw InvalidArgument("r_hat needs G > 0");
  const double n = dim.as_double();
  return (n - 1.0) * (n - 2.0) / (2.0 * g);
}

/// 1 / (2 (n-1)^2 (n-2)^2 c_sharp).
inline double d_sharp(double c_sharp, Dimension dim) {
  if (!(c_sharp > 0.0)) throw InvalidArgument("c_sharp must be positive");
  const double n = dim.as_double();
  return 1.0 / (2.0 * (n - 1.0) * (n - 1.0) * (n - 2.0) * (n - 2.0) * c_sharp);
}

struct SurgeryFreeWindow {
  double radius;
  double duration;
};

/// (1/(8 c_sharp K), 1/(8 c_sharp K^2)): the window around points with G >= 2K
/// that no surgery may touch.
inline SurgeryFreeWindow surgery_free_window_from_K(double c_sharp, double K) {
  if (!(c_sharp > 0.0) || !(K > 0.0)) throw InvalidArgument("c_sharp and K must be positive");
  return {1.0 / (8.0 * c_sharp * K), 1.0 / (8.0 * c_sharp * K * K)};
}

struct ParabolicNbhd {
  SurfacePointRef center;
  double t = 0.0;
  double spatial_radius = 0.0;
  double time_window = 0.0;
  AxialInterval axial;  // image of the meridional ball under the current embedding
};

namespace detail {

inline double speed_at(const ProfileCurve& c, double s, Dimension dim) {
  return speed(curvatures_at(c, s, dim), dim);
}

// Axial extent of the arclength interval [s0, s1] of the curve.
inline AxialInterval axial_extent(const ProfileCurve& c, double s0, double s1) {
  s0 = std::clamp(s0, 0.0, c.length());
  s1 = std::clamp(s1, 0.0, c.length());
  AxialInterval r{c.interpolate(c.x(), s0), c.interpolate(c.x(), s0)};
  const double xe = c.interpolate(c.x(), s1);
  r.lo = std::min(r.lo, xe);
  r.hi = std::max(r.hi, xe);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.s()[i] < s0 || c.s()[i] > s1) continue;
    r.lo = std::min(r.lo, c.x()[i]);
    r.hi = std::max(r.hi, c.x()[i]);
  }
  return r;
}

}  // namespace detail

inline ParabolicNbhd build_nbhd(const FlowState& st, const SurfacePointRef& p, const NeckParams& params,
                                Dimension dim) {
  const ProfileCurve& c = st.curve(p.component_id);
  const double g = detail::speed_at(c, p.s, dim);
  const double rh = r_hat(g, dim);
  ParabolicNbhd nb;
  nb.center = p;
  nb.t = st.t;
  nb.spatial_radius = rh * params.L;
  nb.time_window = params.theta * rh * rh;
  const double span = st.t - st.history.earliest_time();
  if (nb.time_window > span * (1.0 + 1e-12) + 1e-300) {
    throw InsufficientHistory("backward window " + std::to_string(nb.time_window) + " exceeds history span " +
                              std::to_string(span));
  }
  nb.axial = detail::axial_extent(c, p.s - nb.spatial_radius, p.s + nb.spatial_radius);
  return nb;
}

/// True iff no logged surgery falls in the time window and touches the
/// neighbourhood's axial extent inflated by one spatial radius.
inline bool surgery_free(const ParabolicNbhd& nb, const SurgeryLog& log) {
  const AxialInterval zone = nb.axial.inflated(nb.spatial_radius);
  for (const auto& r : log.records()) {
    if (r.time < nb.t - nb.time_window || r.time > nb.t) continue;
    if (r.modified_interval.intersects(zone)) return false;
  }
  return true;
}

struct Nd1Result {
  bool passes = false;
  double g = 0.0;
  double l1_over_g = 0.0;
};

inline Nd1Result check_nd1(const FlowState& st, const SurfacePointRef& p, const NeckParams& params, Dimension dim) {
  const auto spec = curvatures_at(st.curve(p.component_id), p.s, dim);
  Nd1Result r;
  r.g = speed(spec, dim);
  r.l1_over_g = spec.lambda1() / r.g;
  r.passes = r.g >= params.g0 && r.l1_over_g <= params.eta0;
  return r;
}

struct NeckRegion {
  ComponentId component_id = 0;
  double s_a = 0.0;
  double s_b = 0.0;
  double center_s = 0.0;
  AxialInterval axial;
  double mean_radius = 0.0;
  double radius_deviation = 0.0;
  double axis_deviation = 0.0;
  double center_l1_over_g = 0.0;
  double center_g = 0.0;
  bool certified_shrinking = false;
  int shrinking_samples = 0;  // past times examined
  double worst_shrinking_error = 0.0;  // max |r(tau) - rho| / r
};

namespace detail {

// Mean radius of the part of component `id` (or, failing that, of the first
// component covering x_mid) inside the axial window.
inline std::optional<double> past_mean_radius(const Snapshot& snap, ComponentId id, const AxialInterval& win) {
  const double x_mid = 0.5 * (win.lo + win.hi);
  const ProfileCurve* c = nullptr;
  if (auto it = snap.components.find(id); it != snap.components.end()) {
    c = it->second.get();
  } else {
    for (const auto& [cid, cp] : snap.components) {
      if (cp->x().front() <= x_mid && x_mid <= cp->x().back()) {
        c = cp.get();
        break;
      }
    }
  }
  if (!c) return std::nullopt;
  double acc = 0.0;
  int k = 0;
  for (std::size_t i = 0; i < c->size(); ++i) {
    if (c->x()[i] < win.lo || c->x()[i] > win.hi) continue;
    acc += c->u()[i];
    ++k;
  }
  if (k == 0) return std::nullopt;
  return acc / k;
}

}  // namespace detail

/// Certified necks of the current state, merged per component and ordered by
/// component id then arclength.
inline std::vector<NeckRegion> detect(const FlowState& st, const NeckParams& params, const SurgeryLog& log,
                                      Dimension dim) {
  params.validate();
  std::vector<NeckRegion> out;
  const auto stride = static_cast<std::size_t>(params.candidate_stride);
  for (const auto& [id, cp] : st.components) {
    const ProfileCurve& c = *cp;
    const NodeFields f = evaluate_nodes(c, dim);
    if (f.first_bad) continue;
    std::vector<NeckRegion> found;
    for (std::size_t i = 0; i < c.size(); i += stride) {
      if (c.is_pole(i) || f.g[i] < params.g0) continue;
      const double l1g = f.lambda1[i] / f.g[i];
      if (l1g > params.eta0) continue;
      const SurfacePointRef p{id, c.s()[i]};
      ParabolicNbhd nb;
      try {
        nb = build_nbhd(st, p, params, dim);
      } catch (const InsufficientHistory&) {
        continue;
      }
      if (!surgery_free(nb, log)) continue;

      const double rh = r_hat(f.g[i], dim);
      const double s_a = std::max(0.0, c.s()[i] - params.L * rh);
      const double s_b = std::min(c.length(), c.s()[i] + params.L * rh);
      double sum_u = 0.0;
      int k = 0;
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (c.s()[j] < s_a || c.s()[j] > s_b) continue;
        sum_u += c.u()[j];
        ++k;
      }
      if (k < 3) continue;
      const double rbar = sum_u / k;
      double rdev = 0.0, adev = 0.0;
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (c.s()[j] < s_a || c.s()[j] > s_b) continue;
        rdev = std::max(rdev, std::abs(c.u()[j] - rbar) / rbar);
        adev = std::max(adev, std::abs(std::sin(c.phi()[j])));
      }
      if (rdev > params.epsilon || adev > params.epsilon) continue;
      if ((s_b - s_a) / rbar < 2.0 * (params.L - 2.0)) continue;

      NeckRegion r;
      r.component_id = id;
      r.s_a = s_a;
      r.s_b = s_b;
      r.center_s = c.s()[i];
      r.axial = detail::axial_extent(c, s_a, s_b);
      r.mean_radius = rbar;
      r.radius_deviation = rdev;
      r.axis_deviation = adev;
      r.center_l1_over_g = l1g;
      r.center_g = f.g[i];

      // Shrinking: earlier radii follow sqrt(r^2 + c (t - tau)) and stay in [r, 2r].
      bool ok = true;
      for (const Snapshot* snap : st.history.in_window(st.t - nb.time_window, st.t)) {
        if (snap->step >= st.step) continue;
        if (snap->surgery_epoch != st.surgery_epoch) {
          ok = false;
          break;
        }
        const double rho = std::sqrt(rbar * rbar + params.rho_coefficient * (st.t - snap->t));
        const auto measured = detail::past_mean_radius(*snap, id, r.axial);
        if (!measured) {
          ok = false;
          break;
        }
        ++r.shrinking_samples;
        const double err = std::abs(*measured - rho) / rbar;
        r.worst_shrinking_error = std::max(r.worst_shrinking_error, err);
        if (err > params.epsilon || rho < rbar || rho > 2.0 * rbar) ok = false;
      }
      r.certified_shrinking = ok && r.shrinking_samples > 0;
      found.push_back(r);
    }

    // Merge overlapping windows; the merged region keeps the metrics of its
    // member with the smallest lambda1/G (then smallest s).
    std::sort(found.begin(), found.end(), [](const NeckRegion& a, const NeckRegion& b) { return a.s_a < b.s_a; });
    std::vector<NeckRegion> merged;
    for (const auto& r : found) {
      if (!merged.empty() && r.s_a <= merged.back().s_b) {
        NeckRegion& m = merged.back();
        const double lo = m.s_a;
        const double hi = std::max(m.s_b, r.s_b);
        const AxialInterval ax = m.axial.hull(r.axial);
        const bool better = r.center_l1_over_g < m.center_l1_over_g ||
                            (r.center_l1_over_g == m.center_l1_over_g && r.center_s < m.center_s);
        if (better) m = r;
        m.s_a = lo;
        m.s_b = hi;
        m.axial = ax;
      } else {
        merged.push_back(r);
      }
    }
    out.insert(out.end(), merged.begin(), merged.end());
  }
  return out;
}

/// alpha0 = (exp(c_sharp pi / eta0) - 1) / c_sharp.
inline double dichotomy_alpha0(double c_sharp, double eta0) {
  if (!(c_sharp > 0.0) || !(eta0 > 0.0)) throw InvalidArgument("c_sharp and eta0 must be positive");
  return std::expm1(c_sharp * M_PI / eta0) / c_sharp;
}

/// gamma0 = 1 + c_sharp alpha0.
inline double dichotomy_gamma0(double c_sharp, double eta0) { return 1.0 + c_sharp * dichotomy_alpha0(c_sharp, eta0); }

enum class DichotomyOutcome { AllConvex, Witness, Inconclusive };

inline const char* to_string(DichotomyOutcome o) {
  switch (o) {
    case DichotomyOutcome::AllConvex: return "all_convex";
    case DichotomyOutcome::Witness: return "witness";
    case DichotomyOutcome::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct DichotomyResult {
  DichotomyOutcome outcome = DichotomyOutcome::Inconclusive;
  double alpha0 = 0.0;
  double gamma0 = 0.0;
  double g_p = 0.0;
  double search_radius = 0.0;
  std::optional<SurfacePointRef> witness;
  double g_witness = 0.0;
  bool witness_bound_ok = false;  // G(q) >= G(p) / gamma0
};

/// Searches the meridional ball of radius alpha0/G(p) around p for the
/// nearest node with lambda1 <= eta0 G.
inline DichotomyResult convexity_dichotomy(const FlowState& st, const SurfacePointRef& p, double eta0, double c_sharp,
                                           double g_sharp, Dimension dim) {
  const ProfileCurve& c = st.curve(p.component_id);
  DichotomyResult r;
  r.alpha0 = dichotomy_alpha0(c_sharp, eta0);
  r.gamma0 = 1.0 + c_sharp * r.alpha0;
  const auto spec = curvatures_at(c, p.s, dim);
  r.g_p = speed(spec, dim);
  if (!(spec.lambda1() > eta0 * r.g_p)) throw HypothesisNotMet("lambda1(p) <= eta0 G(p)");
  if (!(r.g_p >= r.gamma0 * g_sharp)) throw HypothesisNotMet("G(p) < gamma0 g_sharp");
  r.search_radius = r.alpha0 / r.g_p;

  const NodeFields f = evaluate_nodes(c, dim);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = std::abs(c.s()[i] - p.s);
    if (d > r.search_radius) continue;
    if (f.lambda1[i] <= eta0 * f.g[i] && d < best) {
      best = d;
      r.witness = SurfacePointRef{p.component_id, c.s()[i]};
      r.g_witness = f.g[i];
    }
  }
  if (r.witness) {
    r.outcome = DichotomyOutcome::Witness;
    r.witness_bound_ok = r.g_witness >= r.g_p / r.gamma0;
  } else if (p.s - r.search_radius <= 0.0 && p.s + r.search_radius >= c.length()) {
    r.outcome = DichotomyOutcome::AllConvex;
  }
  return r;
}

}  // namespace gflow
