#pragma once

// Standard surgery on certified necks and the flow-with-surgeries loop.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gflow/curvature.hpp"
#include "gflow/errors.hpp"
#include "gflow/flow.hpp"
#include "gflow/neck.hpp"
#include "gflow/profile.hpp"
#include "gflow/state.hpp"

namespace gflow {

/// g1 < g2 = omega2 g1 < g3 = omega3 g2.
class SurgeryThresholds {
 public:
  SurgeryThresholds(double g1, double g2, double g3) : g1_(g1), g2_(g2), g3_(g3) {
    if (!(g1 > 0.0)) throw InvalidArgument("threshold chain: g1 must be positive");
    if (!(g2 > g1)) throw InvalidArgument("threshold chain: g2 must exceed g1");
    if (!(g3 > g2)) throw InvalidArgument("threshold chain: g3 must exceed g2");
  }

  static SurgeryThresholds from_omegas(double g1, double omega2, double omega3) {
    if (!(omega2 > 1.0) || !(omega3 > 1.0)) throw InvalidArgument("threshold chain: omega2 and omega3 must exceed 1");
    return SurgeryThresholds(g1, omega2 * g1, omega3 * omega2 * g1);
  }

  double g1() const { return g1_; }
  double g2() const { return g2_; }
  double g3() const { return g3_; }
  double omega2() const { return g2_ / g1_; }
  double omega3() const { return g3_ / g2_; }
  /// Curvature scale of every surgery, K* = g3 / omega3 = g2.
  double k_star() const { return g2_; }

 private:
  double g1_, g2_, g3_;
};

enum class CutRadiusRule {
  Primary,      // r* = (n-1) / K*
  Alternative,  // r* = (n-1)(n-2) / (2 K*)
};

inline double cut_radius(double k_star, Dimension dim, CutRadiusRule rule) {
  const double n = dim.as_double();
  return rule == CutRadiusRule::Primary ? (n - 1.0) / k_star : (n - 1.0) * (n - 2.0) / (2.0 * k_star);
}

struct CutChoice {
  ComponentId component_id = 0;
  std::size_t index = 0;
  double cut_s = 0.0;
  double k_star = 0.0;
  double r_star = 0.0;
  std::size_t lo = 0;  // node range of the neck extended through its flanks
  std::size_t hi = 0;
};

namespace detail {

// Neck node range extended outward while the radius does not decrease.
inline std::pair<std::size_t, std::size_t> flank_range(const ProfileCurve& c, double s_a, double s_b) {
  std::size_t lo = c.size() - 1, hi = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.s()[i] >= s_a && c.s()[i] <= s_b) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
  }
  if (lo > hi) {
    lo = hi = c.nearest_node(0.5 * (s_a + s_b));
  }
  while (lo > 0 && !c.is_pole(lo - 1) && c.u()[lo - 1] >= c.u()[lo]) --lo;
  while (hi + 1 < c.size() && !c.is_pole(hi + 1) && c.u()[hi + 1] >= c.u()[hi]) ++hi;
  return {lo, hi};
}

// Node in [lo, hi] with radius closest to r_star; ties go to the node farther
// from `away`, then to the smaller arclength.
inline std::optional<std::size_t> closest_radius_node(const ProfileCurve& c, std::size_t lo, std::size_t hi,
                                                      double r_star, std::size_t away) {
  std::optional<std::size_t> best;
  double best_err = 0.0, best_dist = 0.0;
  const double tie = 1e-12 * r_star;
  for (std::size_t i = lo; i <= hi; ++i) {
    if (c.is_pole(i)) continue;
    const double err = std::abs(c.u()[i] - r_star);
    const double dist = std::abs(c.s()[i] - c.s()[away]);
    if (!best || err < best_err - tie || (std::abs(err - best_err) <= tie && dist > best_dist)) {
      best = i;
      best_err = err;
      best_dist = dist;
    }
  }
  return best;
}

inline bool radius_in_band(double u, double r_star) { return u / r_star >= 0.8 && u / r_star <= 1.25; }

}  // namespace detail

/// Cut cross-section for a surgery on `neck`, at the radius closest to r*.
inline CutChoice select_cut(const NeckRegion& neck, const FlowState& st, const SurgeryThresholds& th, Dimension dim,
                            CutRadiusRule rule = CutRadiusRule::Primary) {
  const ProfileCurve& c = st.curve(neck.component_id);
  const NodeFields f = evaluate_nodes(c, dim);
  if (f.first_bad) throw LostTwoConvexity(neck.component_id, c.s()[*f.first_bad], st.t);
  if (f.max_g() < th.g3()) {
    throw SurgeryInvariantViolated("surgery requested on a component with max G below g3");
  }
  CutChoice cut;
  cut.component_id = neck.component_id;
  cut.k_star = th.k_star();
  cut.r_star = cut_radius(cut.k_star, dim, rule);
  std::tie(cut.lo, cut.hi) = detail::flank_range(c, neck.s_a, neck.s_b);
  const auto best = detail::closest_radius_node(c, cut.lo, cut.hi, cut.r_star, f.argmax_g());
  if (!best || !detail::radius_in_band(c.u()[*best], cut.r_star)) {
    throw NoSuitableCrossSection("neck radii do not reach r*=" + std::to_string(cut.r_star));
  }
  cut.index = *best;
  cut.cut_s = c.s()[*best];
  return cut;
}

struct CapOptions {
  double spacing = 1e-2;
  double tip_fraction = 0.9;  // tip sphere speed as a fraction of K*
};

namespace detail {

struct Mirrored {
  std::vector<double> x, u;
};

inline Mirrored mirror(const std::vector<double>& x, const std::vector<double>& u) {
  Mirrored m;
  m.x.assign(x.rbegin(), x.rend());
  m.u.assign(u.rbegin(), u.rend());
  for (double& v : m.x) v = -v;
  return m;
}

// Appends a convex cap to the end of (x, u), whose last tangent angle is phi_a:
// a circular arc of radius R followed by a round tip of radius r_c centred on
// the axis, tangent to each other and to the curve.
inline void append_end_cap(std::vector<double>& x, std::vector<double>& u, double phi_a, double r_c, double step) {
  const double xa = x.back();
  const double ua = u.back();
  const double ca = std::cos(phi_a);
  if (!(ca > 1e-3)) throw CapConstructionFailed("cut cross-section is not transverse to the axis");
  if (!(r_c < ua)) throw CapConstructionFailed("tip radius exceeds the cut radius");
  const double R = 1.5 * ua / ca;
  const double ox = xa + R * std::sin(phi_a);
  const double ou = ua - R * ca;
  const double cos_psi = (R * ca - ua) / (R - r_c);
  if (!(cos_psi > 0.0 && cos_psi <= 1.0)) throw CapConstructionFailed("no tangent tip sphere for this cut");
  const double psi = -std::acos(cos_psi);
  if (!(psi <= phi_a)) throw CapConstructionFailed("cap would turn backwards");

  const int arc_n = std::max(2, static_cast<int>(std::ceil(R * (phi_a - psi) / step)));
  for (int k = 1; k <= arc_n; ++k) {
    const double ph = phi_a + (psi - phi_a) * k / arc_n;
    x.push_back(ox - R * std::sin(ph));
    u.push_back(ou + R * std::cos(ph));
  }
  const double cx = ox - (R - r_c) * std::sin(psi);
  const double span = psi + 0.5 * M_PI;
  const int tip_n = std::max(4, static_cast<int>(std::ceil(r_c * span / step)));
  for (int k = 1; k <= tip_n; ++k) {
    const double ph = psi - span * k / tip_n;
    x.push_back(cx - r_c * std::sin(ph));
    u.push_back(r_c * std::cos(ph));
  }
  x.back() = cx + r_c;
  u.back() = 0.0;
}

struct CapCheck {
  double max_g = 0.0;
  double min_lambda1 = 0.0;
  bool ok = false;
};

// Band check on the nodes beyond arclength s_from.
inline CapCheck check_cap(const ProfileCurve& c, double s_from, double k_star, Dimension dim) {
  const NodeFields f = evaluate_nodes(c, dim);
  CapCheck r;
  r.min_lambda1 = std::numeric_limits<double>::infinity();
  if (f.first_bad) return r;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.s()[i] < s_from) continue;
    r.max_g = std::max(r.max_g, f.g[i]);
    r.min_lambda1 = std::min(r.min_lambda1, f.lambda1[i]);
  }
  r.ok = r.max_g >= 0.5 * k_star && r.max_g <= 2.0 * k_star && r.min_lambda1 > 0.0;
  return r;
}

inline ProfileCurve smooth_beyond(const ProfileCurve& c, double s_from) {
  std::vector<double> x = c.x(), u = c.u();
  for (std::size_t i = 1; i + 1 < c.size(); ++i) {
    if (c.s()[i] < s_from) continue;
    x[i] = 0.25 * (c.x()[i - 1] + 2.0 * c.x()[i] + c.x()[i + 1]);
    u[i] = 0.25 * (c.u()[i - 1] + 2.0 * c.u()[i] + c.u()[i + 1]);
  }
  return ProfileCurve(std::move(x), std::move(u), c.start_kind(), c.end_kind());
}

struct CappedPiece {
  ProfileCurve curve;
  double cap_from_s;  // start of the cap region (end caps) in this curve's arclength
  CapCheck check;
};

// Caps the end of the node range, whose last node sits at arclength s_cut of
// the original curve; the band check covers the cap beyond a two-node blend.
inline CappedPiece cap_end(std::vector<double> x, std::vector<double> u, EndKind start, double s_cut, double phi_a,
                           double r_c, double k_star, const CapOptions& opt, Dimension dim) {
  append_end_cap(x, u, phi_a, r_c, 0.25 * opt.spacing);
  ProfileCurve raw(std::move(x), std::move(u), start, EndKind::Pole);
  ProfileCurve c = resample(raw, opt.spacing);
  const double from = s_cut * c.length() / raw.length() + 2.0 * opt.spacing;
  CapCheck chk = check_cap(c, from, k_star, dim);
  if (!chk.ok) {
    c = smooth_beyond(c, from - 2.0 * opt.spacing);
    chk = check_cap(c, from, k_star, dim);
    if (!chk.ok) {
      throw CapConstructionFailed("cap max G " + std::to_string(chk.max_g) + " or min lambda1 " +
                                  std::to_string(chk.min_lambda1) + " outside the band");
    }
  }
  return {std::move(c), from, chk};
}

inline ProfileCurve unmirror(const ProfileCurve& c) {
  const Mirrored m = mirror(c.x(), c.u());
  return ProfileCurve(m.x, m.u, c.end_kind(), c.start_kind());
}

inline AxialInterval cap_extent(const ProfileCurve& c, double s_from) {
  AxialInterval r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.s()[i] < s_from) continue;
    r.lo = std::min(r.lo, c.x()[i]);
    r.hi = std::max(r.hi, c.x()[i]);
  }
  return r;
}

}  // namespace detail

struct PerformResult {
  SurgeryRecord record;
  std::vector<ComponentId> retained;
  ComponentId removed = 0;
  double area_before = 0.0;
  double area_after = 0.0;  // retained pieces only
  double cap_pair_area = 0.0;
};

/// Cuts the component on both flanks of its curvature peak, caps the three
/// pieces, and replaces the component by them. The middle piece is returned
/// as `removed`; it stays in the state until classification drops it.
inline PerformResult perform(FlowState& st, const NeckRegion& neck, const CutChoice& cut, Dimension dim,
                             const CapOptions& opt = {}) {
  const ProfileCurve c = st.curve(cut.component_id);
  const NodeFields f = evaluate_nodes(c, dim);
  if (f.first_bad) throw LostTwoConvexity(cut.component_id, c.s()[*f.first_bad], st.t);

  std::size_t peak = cut.lo;
  for (std::size_t i = cut.lo; i <= cut.hi; ++i)
    if (f.g[i] > f.g[peak]) peak = i;
  std::size_t ia, ib;
  if (cut.index < peak) {
    ia = cut.index;
    const auto other = detail::closest_radius_node(c, peak + 1, cut.hi, cut.r_star, peak);
    if (!other || !detail::radius_in_band(c.u()[*other], cut.r_star))
      throw NoSuitableCrossSection("no second cut on the far flank");
    ib = *other;
  } else {
    ib = cut.index;
    if (peak == 0) throw NoSuitableCrossSection("no second cut on the far flank");
    const auto other = detail::closest_radius_node(c, cut.lo, peak - 1, cut.r_star, peak);
    if (!other || !detail::radius_in_band(c.u()[*other], cut.r_star))
      throw NoSuitableCrossSection("no second cut on the far flank");
    ia = *other;
  }
  if (!(ia < peak && peak < ib)) throw NoSuitableCrossSection("cuts do not bracket the curvature peak");
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (f.g[i] > 2.0 * cut.k_star && (i <= ia || i >= ib)) {
      throw NoSuitableCrossSection("curvature above 2K* outside the cut interval");
    }
  }
  if (ia < 1 || ib + 2 > c.size()) throw NoSuitableCrossSection("cut too close to the end of the curve");

  const double n = dim.as_double();
  const double r_c = 4.0 / (n * (n - 1.0) * opt.tip_fraction * cut.k_star);
  const auto& X = c.x();
  const auto& U = c.u();
  const auto& PHI = c.phi();

  // Left piece: nodes [0, ia] with an end cap.
  detail::CappedPiece left = detail::cap_end(std::vector<double>(X.begin(), X.begin() + ia + 1),
                                             std::vector<double>(U.begin(), U.begin() + ia + 1), c.start_kind(),
                                             c.s()[ia], PHI[ia], r_c, cut.k_star, opt, dim);
  // Right piece: nodes [ib, end], capped at its start through the mirror image.
  const auto rm =
      detail::mirror(std::vector<double>(X.begin() + ib, X.end()), std::vector<double>(U.begin() + ib, U.end()));
  detail::CappedPiece right_m = detail::cap_end(rm.x, rm.u, c.end_kind(), c.length() - c.s()[ib], -PHI[ib], r_c,
                                                cut.k_star, opt, dim);
  const ProfileCurve right = detail::unmirror(right_m.curve);
  // Middle piece: nodes [ia, ib], capped at both ends. It is removed, so its
  // caps are not band-checked.
  std::vector<double> mx(X.begin() + ia, X.begin() + ib + 1), mu(U.begin() + ia, U.begin() + ib + 1);
  detail::append_end_cap(mx, mu, PHI[ib], r_c, 0.25 * opt.spacing);
  auto mm = detail::mirror(mx, mu);
  detail::append_end_cap(mm.x, mm.u, -PHI[ia], r_c, 0.25 * opt.spacing);
  const auto mb = detail::mirror(mm.x, mm.u);
  const ProfileCurve middle = resample(ProfileCurve(mb.x, mb.u, EndKind::Pole, EndKind::Pole), opt.spacing);

  PerformResult res;
  res.area_before = total_area(c, dim);
  res.area_after = total_area(left.curve, dim) + total_area(right, dim);

  SurgeryRecord rec;
  rec.time = st.t;
  rec.component_id = cut.component_id;
  rec.cut_s = cut.cut_s;
  rec.cut_s_far = (cut.index == ia) ? c.s()[ib] : c.s()[ia];
  rec.k_star = cut.k_star;
  rec.r_star = cut.r_star;
  rec.pre_max_g = f.max_g();
  rec.post_max_g = std::max(left.check.max_g, right_m.check.max_g);
  const NodeFields fm = evaluate_nodes(middle, dim);
  rec.removed_component_max_g = fm.max_g();
  AxialInterval mod{X[ia], X[ib]};
  mod = mod.hull(detail::cap_extent(left.curve, left.cap_from_s));
  const AxialInterval rcap = detail::cap_extent(right_m.curve, right_m.cap_from_s);
  mod = mod.hull(AxialInterval{-rcap.hi, -rcap.lo});
  rec.modified_interval = mod;

  // Caps alone: the part of each retained piece beyond its cut.
  auto part_area = [&](const ProfileCurve& pc, double s_from) {
    const int p = dim.value() - 1;
    double acc = 0.0;
    for (std::size_t i = 1; i < pc.size(); ++i) {
      if (pc.s()[i - 1] < s_from - 2.0 * opt.spacing) continue;
      acc += 0.5 * (std::pow(pc.u()[i - 1], p) + std::pow(pc.u()[i], p)) * (pc.s()[i] - pc.s()[i - 1]);
    }
    return dim.unit_sphere_area() * acc;
  };
  res.cap_pair_area = part_area(left.curve, left.cap_from_s) + part_area(right_m.curve, right_m.cap_from_s);
  if (!(res.area_after < res.area_before)) {
    throw SurgeryInvariantViolated("retained area did not decrease across surgery");
  }

  st.remove_component(cut.component_id);
  res.retained.push_back(st.add_component(left.curve));
  res.removed = st.add_component(middle);
  res.retained.push_back(st.add_component(right));
  ++st.surgery_epoch;
  rec.epoch = st.surgery_epoch;
  st.log.append(rec);
  ++st.step;
  st.record();
  res.record = rec;
  (void)neck;
  return res;
}

enum class Verdict { DiscardSphere, DiscardConvex, Retain };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::DiscardSphere: return "discard_sphere";
    case Verdict::DiscardConvex: return "discard_convex";
    case Verdict::Retain: return "retain";
  }
  return "unknown";
}

struct ComponentVerdict {
  ComponentId component_id = 0;
  Verdict verdict = Verdict::Retain;
  bool closed = false;
  double min_l1_over_g = 0.0;
  double max_g = 0.0;
  double covered_fraction = 0.0;  // nodes that are convex or inside a neck band
  bool g3_violation = false;
  std::string reason;
};

struct NeckBand {
  ComponentId component_id = 0;
  double s_a = 0.0;
  double s_b = 0.0;
};

/// Verdicts per component. `motivated` maps components split off by a surgery
/// to that surgery's K*; those must reach 10 K* somewhere or carry the
/// g3_violation flag.
inline std::vector<ComponentVerdict> classify_components(const FlowState& st, const std::vector<NeckBand>& bands,
                                                         Dimension dim,
                                                         const std::map<ComponentId, double>& motivated = {}) {
  std::vector<ComponentVerdict> out;
  for (const auto& [id, cp] : st.components) {
    const ProfileCurve& c = *cp;
    const NodeFields f = evaluate_nodes(c, dim);
    ComponentVerdict v;
    v.component_id = id;
    v.closed = c.closed();
    v.max_g = f.first_bad ? std::numeric_limits<double>::quiet_NaN() : f.max_g();
    double min_l1 = std::numeric_limits<double>::infinity();
    for (double l : f.lambda1) min_l1 = std::min(min_l1, l);
    v.min_l1_over_g = min_l1 / v.max_g;
    std::size_t covered = 0;
    const double tol = 1e-10 * v.max_g;
    for (std::size_t i = 0; i < c.size(); ++i) {
      bool in_band = false;
      for (const auto& b : bands)
        if (b.component_id == id && c.s()[i] >= b.s_a && c.s()[i] <= b.s_b) in_band = true;
      if (f.lambda1[i] > -tol || in_band) ++covered;
    }
    v.covered_fraction = static_cast<double>(covered) / static_cast<double>(c.size());
    if (!f.first_bad && v.closed && min_l1 > -tol) {
      v.verdict = Verdict::DiscardConvex;
      v.reason = "convex";
    } else if (!f.first_bad && v.closed && covered == c.size()) {
      v.verdict = Verdict::DiscardSphere;
      v.reason = "closed, convex outside neck bands";
    } else {
      v.verdict = Verdict::Retain;
      v.reason = v.closed ? "not convex" : "not closed";
    }
    if (v.verdict != Verdict::Retain) {
      if (auto it = motivated.find(id); it != motivated.end()) v.g3_violation = !(v.max_g >= 10.0 * it->second);
    }
    out.push_back(v);
  }
  return out;
}

enum class LoopVerdict { Convex, AllComponentsSpheres, TimeLimit };

inline const char* to_string(LoopVerdict v) {
  switch (v) {
    case LoopVerdict::Convex: return "convex";
    case LoopVerdict::AllComponentsSpheres: return "all components spheres";
    case LoopVerdict::TimeLimit: return "time limit";
  }
  return "unknown";
}

struct DichotomyParams {
  double eta0 = 1.0;
  double c_sharp = 1.0;
  double g_sharp = 0.1;
};

struct LoopOptions {
  int max_surgeries = 100;
  double t_max = std::numeric_limits<double>::infinity();
  int detect_interval = 100;  // steps between neck scans during smooth flow
  double extinction_spacings = 6.0;
  CutRadiusRule cut_rule = CutRadiusRule::Primary;
  CapOptions cap;
  DichotomyParams dichotomy;
};

struct LoopObserver {
  std::function<void(const FlowState&, const StepInfo&)> on_step;
  std::function<void(const FlowState&, const std::vector<NeckRegion>&)> on_necks;
  std::function<void(const FlowState&, const PerformResult&)> on_surgery;
  std::function<void(const FlowState&, const ComponentVerdict&)> on_discard;
  std::function<void(const FlowState&)> on_trigger;  // max G reached g3, before any surgery
};

struct TerminationReport {
  LoopVerdict verdict = LoopVerdict::Convex;
  int surgeries = 0;
  int final_components = 0;  // discarded components, not counting removed neck pieces
  double t = 0.0;
  std::vector<ComponentVerdict> discarded;
  std::vector<double> post_surgery_max_g;  // retained max G after each surgery epoch
};

namespace detail {

inline double component_min_l1(const NodeFields& f) {
  return *std::min_element(f.lambda1.begin(), f.lambda1.end());
}

}  // namespace detail

/// Alternates smooth flow with surgeries until every component is discarded.
inline TerminationReport surgery_loop(FlowState& st, const SurgeryThresholds& th, const NeckParams& np,
                                      const StepControl& ctl, Dimension dim, const LoopOptions& opt = {},
                                      const LoopObserver& obs = {}) {
  np.validate();
  ctl.validate();
  if (max_speed(st, dim) >= th.g3()) throw SurgeryInvariantViolated("initial max G must lie below g3");

  TerminationReport rep;
  std::set<ComponentId> removed_pieces;
  auto discard = [&](ComponentVerdict v) {
    st.remove_component(v.component_id);
    if (!removed_pieces.count(v.component_id)) ++rep.final_components;
    if (obs.on_discard) obs.on_discard(st, v);
    rep.discarded.push_back(std::move(v));
  };

  while (!st.components.empty()) {
    if (st.t >= opt.t_max) {
      rep.verdict = LoopVerdict::TimeLimit;
      rep.t = st.t;
      return rep;
    }

    // Components shrunk below the resolution are convex caps about to vanish.
    std::vector<ComponentId> tiny;
    for (const auto& [id, c] : st.components)
      if (c->length() < opt.extinction_spacings * ctl.spacing) tiny.push_back(id);
    for (ComponentId id : tiny) {
      ComponentVerdict v;
      v.component_id = id;
      v.verdict = Verdict::DiscardConvex;
      v.closed = st.curve(id).closed();
      v.reason = "extinct below resolution";
      discard(v);
    }
    if (st.components.empty()) break;

    std::map<ComponentId, NodeFields> fields;
    double max_g = 0.0;
    for (const auto& [id, c] : st.components) {
      NodeFields f = evaluate_nodes(*c, dim);
      if (f.first_bad) throw LostTwoConvexity(id, c->s()[*f.first_bad], st.t);
      max_g = std::max(max_g, f.max_g());
      fields.emplace(id, std::move(f));
    }

    if (max_g < th.g3()) {
      const StepInfo info = step(st, ctl, dim);
      if (obs.on_step) obs.on_step(st, info);
      if (obs.on_necks && opt.detect_interval > 0 && st.step % opt.detect_interval == 0 && max_g >= np.g0) {
        auto necks = detect(st, np, st.log, dim);
        if (!necks.empty()) obs.on_necks(st, necks);
      }
      continue;
    }

    // Surgery time: max G has reached g3.
    if (obs.on_trigger) obs.on_trigger(st);
    std::vector<NeckBand> bands;
    std::map<ComponentId, double> motivated;
    int here = 0;
    for (;;) {
      // Component with the largest max G above g2 that has a certified neck.
      std::vector<std::pair<double, ComponentId>> order;
      for (const auto& [id, c] : st.components) {
        if (removed_pieces.count(id)) continue;
        const double g = evaluate_nodes(*c, dim).max_g();
        if (g > th.g2()) order.emplace_back(-g, id);
      }
      std::sort(order.begin(), order.end());
      if (order.empty()) break;
      const auto necks = detect(st, np, st.log, dim);
      if (obs.on_necks && !necks.empty()) obs.on_necks(st, necks);
      std::optional<NeckRegion> chosen;
      for (const auto& [neg_g, id] : order) {
        const ProfileCurve& c = st.curve(id);
        const NodeFields f = evaluate_nodes(c, dim);
        const double s_peak = c.s()[f.argmax_g()];
        for (const auto& r : necks) {
          if (r.component_id != id || !r.certified_shrinking) continue;
          const bool holds_peak = r.s_a <= s_peak && s_peak <= r.s_b;
          if (!chosen || holds_peak ||
              (!(chosen->s_a <= s_peak && s_peak <= chosen->s_b) && r.center_l1_over_g < chosen->center_l1_over_g)) {
            chosen = r;
            if (holds_peak) break;
          }
        }
        if (chosen) break;
      }
      if (!chosen) break;
      if (rep.surgeries >= opt.max_surgeries) {
        throw AbortTooManySurgeries("more than " + std::to_string(opt.max_surgeries) + " surgeries");
      }
      const CutChoice cut = select_cut(*chosen, st, th, dim, opt.cut_rule);
      PerformResult res = perform(st, *chosen, cut, dim, opt.cap);
      ++rep.surgeries;
      ++here;
      removed_pieces.insert(res.removed);
      bands.push_back({res.removed, 0.0, st.curve(res.removed).length()});
      motivated[res.removed] = res.record.k_star;
      if (obs.on_surgery) obs.on_surgery(st, res);
    }

    if (here > 0) {
      for (const auto& v : classify_components(st, bands, dim, motivated)) {
        if (v.verdict != Verdict::Retain) discard(v);
      }
    }

    // What is still at g3 has no neck: it must be convex.
    std::vector<ComponentId> high;
    for (const auto& [id, c] : st.components)
      if (evaluate_nodes(*c, dim).max_g() >= th.g3()) high.push_back(id);
    for (ComponentId id : high) {
      const ProfileCurve& c = st.curve(id);
      const NodeFields f = evaluate_nodes(c, dim);
      ComponentVerdict v;
      v.component_id = id;
      v.closed = c.closed();
      v.max_g = f.max_g();
      v.min_l1_over_g = detail::component_min_l1(f) / v.max_g;
      v.verdict = Verdict::DiscardConvex;
      bool done = false;
      try {
        const auto d = convexity_dichotomy(st, SurfacePointRef{id, c.s()[f.argmax_g()]}, opt.dichotomy.eta0,
                                           opt.dichotomy.c_sharp, opt.dichotomy.g_sharp, dim);
        if (d.outcome == DichotomyOutcome::AllConvex) {
          v.reason = "dichotomy: all convex";
          done = true;
        }
      } catch (const HypothesisNotMet&) {
      }
      if (!done && c.closed() && detail::component_min_l1(f) > -1e-10 * v.max_g) {
        v.reason = "convex";
        done = true;
      }
      if (!done) {
        throw NumericalFailure("component " + std::to_string(id) + " reached g3 with neither a certified neck " +
                               "nor convexity at t=" + std::to_string(st.t));
      }
      discard(v);
    }

    if (here > 0) {
      double retained = 0.0;
      for (const auto& [id, c] : st.components) retained = std::max(retained, evaluate_nodes(*c, dim).max_g());
      rep.post_surgery_max_g.push_back(retained);
      if (retained > th.g2()) {
        throw SurgeryInvariantViolated("retained max G " + std::to_string(retained) + " exceeds g2 after surgery");
      }
    }
  }
  rep.verdict = rep.surgeries == 0 ? LoopVerdict::Convex : LoopVerdict::AllComponentsSpheres;
  rep.t = st.t;
  return rep;
}

}  // namespace gflow
