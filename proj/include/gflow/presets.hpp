#pragma once

// Initial profile curves for the built-in scenarios.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gflow/errors.hpp"
#include "gflow/profile.hpp"

namespace gflow {

/// Round sphere of radius r, uniform nodes on the semicircle.
inline ProfileCurve sphere_profile(double r, double spacing) {
  if (!(r > 0.0)) throw InvalidArgument("sphere radius must be positive");
  if (!(spacing > 0.0)) throw InvalidArgument("spacing must be positive");
  const auto segments = static_cast<std::size_t>(std::max(3.0, std::round(M_PI * r / spacing)));
  std::vector<double> x(segments + 1), u(segments + 1);
  for (std::size_t j = 0; j <= segments; ++j) {
    const double th = M_PI * static_cast<double>(j) / static_cast<double>(segments);
    x[j] = -r * std::cos(th);
    u[j] = r * std::sin(th);
  }
  x.back() = r;
  return ProfileCurve(std::move(x), std::move(u), EndKind::Pole, EndKind::Pole);
}

/// Round cylinder of radius r over [0, length] with mirror ends.
inline ProfileCurve cylinder_profile(double r, double length, double spacing) {
  if (!(r > 0.0)) throw InvalidArgument("cylinder radius must be positive");
  if (!(length > 0.0)) throw InvalidArgument("cylinder length must be positive");
  if (!(spacing > 0.0)) throw InvalidArgument("spacing must be positive");
  const auto segments = static_cast<std::size_t>(std::max(3.0, std::round(length / spacing)));
  std::vector<double> x(segments + 1), u(segments + 1, r);
  for (std::size_t j = 0; j <= segments; ++j)
    x[j] = length * static_cast<double>(j) / static_cast<double>(segments);
  return ProfileCurve(std::move(x), std::move(u), EndKind::Mirror, EndKind::Mirror);
}

struct ChainShape {
  double bulb_r = 1.0;
  std::vector<double> waists;  // one per bar, left to right
  double separation = 8.0;     // distance between neighbouring bulb centres
};

namespace detail {

// u^2 as a smooth maximum of sphere terms and flat bar terms. Each bar is a
// slightly flared tube so that it pinches first at its midpoint.
inline double chain_u2(const ChainShape& c, double x) {
  const std::size_t bulbs = c.waists.size() + 1;
  const double k = 3.0 / (c.bulb_r * c.bulb_r);
  const double half = 0.5 * c.separation;
  std::vector<double> terms;
  terms.reserve(2 * bulbs);
  for (std::size_t i = 0; i < bulbs; ++i) {
    const double ci = (static_cast<double>(i) - 0.5 * static_cast<double>(bulbs - 1)) * c.separation;
    terms.push_back(c.bulb_r * c.bulb_r - (x - ci) * (x - ci));
  }
  for (std::size_t b = 0; b < c.waists.size(); ++b) {
    const double m = (static_cast<double>(b) + 0.5 - 0.5 * static_cast<double>(bulbs - 1)) * c.separation;
    const double z = (x - m) / half;
    const double w = c.waists[b] * (1.0 + 0.01 * z * z);
    terms.push_back(w * w * (1.0 - std::pow(z, 40)));
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(k * (t - mx));
  return mx + std::log(acc) / k;
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// A chain of equal bulbs joined by thin bars: two bulbs make a dumbbell,
/// three make the three-bulb preset.
inline ProfileCurve chain_profile(const ChainShape& c, double spacing) {
  if (!(c.bulb_r > 0.0)) throw InvalidArgument("bulb radius must be positive");
  if (c.waists.empty()) throw InvalidArgument("a chain needs at least one bar");
  for (double w : c.waists) {
    if (!(w > 0.0 && w < c.bulb_r)) throw InvalidArgument("bar radius must lie in (0, bulb_r)");
  }
  if (!(c.separation > 2.0 * c.bulb_r)) throw InvalidArgument("separation must exceed twice the bulb radius");
  if (!(spacing > 0.0)) throw InvalidArgument("spacing must be positive");

  const std::size_t bulbs = c.waists.size() + 1;
  const double extent = 0.5 * static_cast<double>(bulbs - 1) * c.separation + c.bulb_r;
  auto f = [&](double x) { return detail::chain_u2(c, x); };
  const double x_lo = detail::bisect(f, -extent - c.bulb_r, -extent + 0.5 * c.bulb_r);
  const double x_hi = detail::bisect(f, extent - 0.5 * c.bulb_r, extent + c.bulb_r);

  // x = mid + half sin(theta) puts the poles at simple roots of the sampling
  // parameter, so u is resolved evenly near the axis.
  const double mid = 0.5 * (x_lo + x_hi);
  const double half = 0.5 * (x_hi - x_lo);
  const std::size_t fine = std::max<std::size_t>(4000, static_cast<std::size_t>(40.0 * 2.0 * extent / spacing));
  std::vector<double> x(fine + 1), u(fine + 1);
  for (std::size_t j = 0; j <= fine; ++j) {
    const double th = -0.5 * M_PI + M_PI * static_cast<double>(j) / static_cast<double>(fine);
    x[j] = mid + half * std::sin(th);
    u[j] = std::sqrt(std::max(0.0, f(x[j])));
  }
  x.front() = x_lo;
  x.back() = x_hi;
  return resample(ProfileCurve(std::move(x), std::move(u), EndKind::Pole, EndKind::Pole), spacing);
}

inline ProfileCurve dumbbell_profile(double bulb_r, double waist_r, double separation, double spacing) {
  return chain_profile(ChainShape{bulb_r, {waist_r}, separation}, spacing);
}

}  // namespace gflow
