#pragma once

// Surfaces of revolution in R^{n+1} represented by their generating curve
// (x(s), u(s)) in the half plane u >= 0. Curves run from the lower-x end to the
// higher-x end; the enclosed region lies on the right of the direction of travel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gflow/curvature.hpp"
#include "gflow/errors.hpp"
#include "gflow/spline.hpp"

namespace gflow {

/// How a curve ends. A Pole meets the axis (u = 0); a Mirror end is a plane of
/// reflection symmetry x = const, used to emulate an infinite cylinder.
enum class EndKind { Pole, Mirror };

inline const char* to_string(EndKind k) { return k == EndKind::Pole ? "pole" : "mirror"; }

struct ProfilePoint {
  double s = 0.0;
  double x = 0.0;
  double u = 0.0;
  double phi = 0.0;
};

namespace detail {

// Arc length of a circular arc with chord c that turns by delta.
inline double arc_from_chord(double chord, double delta) {
  const double h = 0.5 * std::abs(delta);
  if (h < 1e-4) return chord * (1.0 + h * h / 6.0 + 7.0 * h * h * h * h / 360.0);
  return chord * h / std::sin(h);
}

// Speed on the axisymmetric spectrum {a, b, ..., b} (b repeated n-1 times).
// Returns a negative value if the spectrum is not two-convex.
inline double axisym_speed(double a, double b, int n) {
  const double pair12 = (a < b) ? a + b : 2.0 * b;
  const double scale = std::max(std::abs(a), std::abs(b));
  if (!(pair12 > std::numeric_limits<double>::epsilon() * scale)) return -1.0;
  const double m = n - 1.0;
  const double sum = m / (a + b) + m * (m - 1.0) / (4.0 * b);
  return 1.0 / sum;
}

}  // namespace detail

/// Immutable discretized profile curve. Tangent angles, arclength and the two
/// distinct principal curvatures are computed once at construction.
class ProfileCurve {
 public:
  ProfileCurve(std::vector<double> x, std::vector<double> u, EndKind start, EndKind end)
      : x_(std::move(x)), u_(std::move(u)), start_(start), end_(end) {
    const std::size_t n = x_.size();
    if (u_.size() != n) throw InvalidArgument("x and u must have the same length");
    if (n < 4) throw CurveTooShort("a profile curve needs at least 4 nodes, got " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(x_[i]) || !std::isfinite(u_[i])) throw NumericalFailure("non-finite profile node");
    }
    if (start_ == EndKind::Pole) u_.front() = 0.0;
    if (end_ == EndKind::Pole) u_.back() = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pole = (i == 0 && start_ == EndKind::Pole) || (i + 1 == n && end_ == EndKind::Pole);
      if (!pole && !(u_[i] > 0.0)) {
        throw DegenerateRadius("non-positive radius u=" + std::to_string(u_[i]) + " at node " +
                               std::to_string(i));
      }
    }
    compute_geometry();
  }

  std::size_t size() const { return x_.size(); }
  EndKind start_kind() const { return start_; }
  EndKind end_kind() const { return end_; }
  bool pole_start() const { return start_ == EndKind::Pole; }
  bool pole_end() const { return end_ == EndKind::Pole; }
  bool closed() const { return pole_start() && pole_end(); }
  bool is_pole(std::size_t i) const {
    return (i == 0 && pole_start()) || (i + 1 == size() && pole_end());
  }

  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& s() const { return s_; }
  const std::vector<double>& phi() const { return phi_; }
  const std::vector<double>& lambda_profile() const { return lp_; }
  const std::vector<double>& lambda_rot() const { return lr_; }

  double length() const { return s_.back(); }

  ProfilePoint point(std::size_t i) const { return {s_[i], x_[i], u_[i], phi_[i]}; }

  double min_spacing() const {
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < size(); ++i) h = std::min(h, s_[i] - s_[i - 1]);
    return h;
  }

  double max_u() const { return *std::max_element(u_.begin(), u_.end()); }

  /// Index of the segment [s_k, s_{k+1}] containing s.
  std::size_t segment_of(double s) const {
    if (s <= s_.front()) return 0;
    if (s >= s_.back()) return size() - 2;
    auto it = std::upper_bound(s_.begin(), s_.end(), s);
    return static_cast<std::size_t>(it - s_.begin()) - 1;
  }

  /// Nearest node to arclength s.
  std::size_t nearest_node(double s) const {
    const std::size_t k = segment_of(s);
    return (s - s_[k] <= s_[k + 1] - s) ? k : k + 1;
  }

  void require_in_range(double s) const {
    const double tol = 1e-12 * std::max(1.0, length());
    if (!(s >= -tol && s <= length() + tol)) {
      throw OutOfRange("arclength " + std::to_string(s) + " outside [0, " + std::to_string(length()) + "]");
    }
  }

  /// Linear interpolation of a nodal field at arclength s.
  double interpolate(const std::vector<double>& f, double s) const {
    const std::size_t k = segment_of(s);
    const double w = std::clamp((s - s_[k]) / (s_[k + 1] - s_[k]), 0.0, 1.0);
    return (1.0 - w) * f[k] + w * f[k + 1];
  }

 private:
  void compute_geometry() {
    const std::size_t n = size();
    phi_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double xp, up, xn, un;
      if (i == 0) {
        xn = x_[1];
        un = u_[1];
        if (start_ == EndKind::Pole) {
          xp = x_[1];
          up = -u_[1];
        } else {
          xp = 2.0 * x_[0] - x_[1];
          up = u_[1];
        }
      } else if (i + 1 == n) {
        xp = x_[n - 2];
        up = u_[n - 2];
        if (end_ == EndKind::Pole) {
          xn = x_[n - 2];
          un = -u_[n - 2];
        } else {
          xn = 2.0 * x_[n - 1] - x_[n - 2];
          un = u_[n - 2];
        }
      } else {
        xp = x_[i - 1];
        up = u_[i - 1];
        xn = x_[i + 1];
        un = u_[i + 1];
      }
      phi_[i] = std::atan2(un - up, xn - xp);
      if (i > 0) {
        while (phi_[i] - phi_[i - 1] > M_PI) phi_[i] -= 2.0 * M_PI;
        while (phi_[i] - phi_[i - 1] < -M_PI) phi_[i] += 2.0 * M_PI;
      }
    }

    s_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      const double chord = std::hypot(x_[i] - x_[i - 1], u_[i] - u_[i - 1]);
      if (!(chord > 0.0)) throw NumericalFailure("coincident profile nodes at index " + std::to_string(i));
      s_[i] = s_[i - 1] + detail::arc_from_chord(chord, phi_[i] - phi_[i - 1]);
    }

    // Ends use the odd reflection of phi about its end value, which is what
    // the pole and mirror symmetries impose.
    lp_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double dphi;
      if (i == 0) {
        dphi = (phi_[1] - phi_[0]) / (s_[1] - s_[0]);
      } else if (i + 1 == n) {
        dphi = (phi_[n - 1] - phi_[n - 2]) / (s_[n - 1] - s_[n - 2]);
      } else {
        const double h1 = s_[i] - s_[i - 1];
        const double h2 = s_[i + 1] - s_[i];
        dphi = -h2 / (h1 * (h1 + h2)) * phi_[i - 1] + (h2 - h1) / (h1 * h2) * phi_[i] +
               h1 / (h2 * (h1 + h2)) * phi_[i + 1];
      }
      lp_[i] = -dphi;
    }

    lr_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) lr_[i] = is_pole(i) ? lp_[i] : std::cos(phi_[i]) / u_[i];
  }

  std::vector<double> x_;
  std::vector<double> u_;
  EndKind start_;
  EndKind end_;
  std::vector<double> s_;
  std::vector<double> phi_;
  std::vector<double> lp_;
  std::vector<double> lr_;
};

/// Nodal curvature quantities for one dimension.
struct NodeFields {
  std::vector<double> lambda1;
  std::vector<double> g;  // negative where the node is not two-convex
  std::vector<double> h;
  std::optional<std::size_t> first_bad;  // first node that is not two-convex

  double max_g() const { return *std::max_element(g.begin(), g.end()); }
  std::size_t argmax_g() const {
    return static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
  }
};

inline NodeFields evaluate_nodes(const ProfileCurve& c, Dimension dim) {
  const int n = dim.value();
  const std::size_t m = c.size();
  NodeFields f;
  f.lambda1.resize(m);
  f.g.resize(m);
  f.h.resize(m);
  const auto& lp = c.lambda_profile();
  const auto& lr = c.lambda_rot();
  for (std::size_t i = 0; i < m; ++i) {
    f.lambda1[i] = std::min(lp[i], lr[i]);
    f.h[i] = lp[i] + (n - 1.0) * lr[i];
    f.g[i] = detail::axisym_speed(lp[i], lr[i], n);
    if (!std::isfinite(f.g[i]) || f.g[i] < 0.0) {
      f.g[i] = -1.0;
      if (!f.first_bad) f.first_bad = i;
    }
  }
  return f;
}

/// Principal curvatures {lambda_profile, lambda_rot x (n-1)} at arclength s,
/// linearly interpolated between nodes.
inline CurvatureSpectrum curvatures_at(const ProfileCurve& c, double s, Dimension dim) {
  c.require_in_range(s);
  const double u = c.interpolate(c.u(), s);
  const std::size_t k = c.nearest_node(s);
  const bool at_node = std::abs(c.s()[k] - s) <= 1e-14 * std::max(1.0, c.length());
  if (!(u > 0.0) && !(at_node && c.is_pole(k))) {
    throw DegenerateRadius("radius vanishes at interior arclength " + std::to_string(s));
  }
  double lp, lr;
  if (at_node) {
    lp = c.lambda_profile()[k];
    lr = c.lambda_rot()[k];
  } else {
    lp = c.interpolate(c.lambda_profile(), s);
    lr = c.interpolate(c.lambda_rot(), s);
  }
  std::vector<double> l(static_cast<std::size_t>(dim.value()), lr);
  l[0] = lp;
  return CurvatureSpectrum(std::move(l));
}

inline double mean_curvature_at(const ProfileCurve& c, double s, Dimension dim) {
  return curvatures_at(c, s, dim).mean_curvature();
}

/// Meridional distance |s1 - s2|.
inline double intrinsic_distance(const ProfileCurve& c, double s1, double s2) {
  c.require_in_range(s1);
  c.require_in_range(s2);
  return std::abs(s1 - s2);
}

/// Area of the hypersurface, omega_{n-1} * integral of u^{n-1} ds (trapezoid rule).
inline double total_area(const ProfileCurve& c, Dimension dim) {
  const int p = dim.value() - 1;
  const auto& s = c.s();
  const auto& u = c.u();
  double acc = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    acc += 0.5 * (std::pow(u[i - 1], p) + std::pow(u[i], p)) * (s[i] - s[i - 1]);
  }
  return dim.unit_sphere_area() * acc;
}

namespace detail {

struct Reflector {
  EndKind kind;
  double x0;
  void apply(double& x, double& u) const {
    if (kind == EndKind::Pole) {
      u = -u;
    } else {
      x = 2.0 * x0 - x;
    }
  }
};

}  // namespace detail

/// Arclength-uniform resampling through a natural cubic spline in arclength.
/// The spline data is extended past each end by the reflection that the end
/// condition implies, so poles and mirror ends are reproduced exactly.
inline ProfileCurve resample(const ProfileCurve& c, double target_spacing) {
  if (!(target_spacing > 0.0)) throw InvalidArgument("target spacing must be positive");
  const std::size_t n = c.size();
  if (n < 4) throw CurveTooShort("resample needs at least 4 nodes");
  const double len = c.length();
  const auto& s = c.s();
  const std::size_t ghosts = std::min<std::size_t>(4, n - 1);

  std::vector<double> ks, kx, ku;
  ks.reserve(n + 2 * ghosts);
  kx.reserve(n + 2 * ghosts);
  ku.reserve(n + 2 * ghosts);
  const detail::Reflector left{c.start_kind(), c.x().front()};
  const detail::Reflector right{c.end_kind(), c.x().back()};
  for (std::size_t k = ghosts; k >= 1; --k) {
    double x = c.x()[k], u = c.u()[k];
    left.apply(x, u);
    ks.push_back(-s[k]);
    kx.push_back(x);
    ku.push_back(u);
  }
  for (std::size_t i = 0; i < n; ++i) {
    ks.push_back(s[i]);
    kx.push_back(c.x()[i]);
    ku.push_back(c.u()[i]);
  }
  for (std::size_t k = 1; k <= ghosts; ++k) {
    const std::size_t i = n - 1 - k;
    double x = c.x()[i], u = c.u()[i];
    right.apply(x, u);
    ks.push_back(2.0 * len - s[i]);
    kx.push_back(x);
    ku.push_back(u);
  }
  const CubicSpline sx(ks, kx);
  const CubicSpline su(ks, ku);

  const auto segments = static_cast<std::size_t>(std::max(3.0, std::round(len / target_spacing)));
  const std::size_t m = segments + 1;
  std::vector<double> sigma(m);
  for (std::size_t j = 0; j < m; ++j) sigma[j] = len * static_cast<double>(j) / static_cast<double>(segments);

  auto build = [&](const std::vector<double>& sg) {
    std::vector<double> x(m), u(m);
    for (std::size_t j = 0; j < m; ++j) {
      x[j] = sx(sg[j]);
      u[j] = su(sg[j]);
    }
    x.front() = c.x().front();
    u.front() = c.u().front();
    x.back() = c.x().back();
    u.back() = c.u().back();
    return ProfileCurve(std::move(x), std::move(u), c.start_kind(), c.end_kind());
  };

  // The discrete arclength of the new nodes differs slightly from the spline
  // parameter; adjust parameters until the discrete spacing is uniform.
  ProfileCurve out = build(sigma);
  for (int iter = 0; iter < 60; ++iter) {
    const auto& so = out.s();
    const double total = out.length();
    double worst = 0.0;
    std::vector<double> next = sigma;
    for (std::size_t j = 1; j + 1 < m; ++j) {
      const double want = total * static_cast<double>(j) / static_cast<double>(segments);
      const double err = so[j] - want;
      worst = std::max(worst, std::abs(err));
      next[j] = sigma[j] - err * (len / total);
    }
    if (worst <= 1e-13 * total) break;
    sigma = std::move(next);
    out = build(sigma);
  }
  return out;
}

}  // namespace gflow
