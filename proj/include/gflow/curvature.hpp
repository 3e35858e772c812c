#pragma once

// Pointwise algebra of the speed G = (sum_{i<j} 1/(l_i + l_j))^{-1} on
// principal-curvature spectra, for hypersurfaces in R^{n+1} with n >= 3.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gflow/errors.hpp"

namespace gflow {

/// Dimension n of the evolving hypersurface.
class Dimension {
 public:
  explicit Dimension(int n) : n_(n) {
    if (n < 3) throw InvalidArgument("dimension must satisfy n >= 3, got " + std::to_string(n));
  }

  int value() const { return n_; }
  double as_double() const { return static_cast<double>(n_); }

  /// Area of the unit (n-1)-sphere, 2 pi^{n/2} / Gamma(n/2).
  double unit_sphere_area() const {
    return 2.0 * std::pow(M_PI, 0.5 * n_) / std::tgamma(0.5 * n_);
  }

  /// (n-1)^2 (n+2) / 4, the ratio H/G on a round cylinder.
  double cylinder_h_over_g() const {
    const double n = as_double();
    return (n - 1.0) * (n - 1.0) * (n + 2.0) / 4.0;
  }

  /// n^2 (n-1) / 4, the ratio H/G on a round sphere.
  double sphere_h_over_g() const {
    const double n = as_double();
    return n * n * (n - 1.0) / 4.0;
  }

  friend bool operator==(const Dimension&, const Dimension&) = default;

 private:
  int n_;
};

/// Principal curvatures sorted ascending. The constructor sorts.
class CurvatureSpectrum {
 public:
  explicit CurvatureSpectrum(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
    if (lambdas_.size() < 3) throw InvalidArgument("a spectrum needs at least 3 principal curvatures");
    for (double l : lambdas_) {
      if (!std::isfinite(l)) throw InvalidArgument("principal curvatures must be finite");
    }
    std::sort(lambdas_.begin(), lambdas_.end());
  }

  CurvatureSpectrum(std::initializer_list<double> lambdas)
      : CurvatureSpectrum(std::vector<double>(lambdas)) {}

  std::span<const double> values() const { return lambdas_; }
  std::size_t size() const { return lambdas_.size(); }
  double operator[](std::size_t i) const { return lambdas_[i]; }
  double lambda1() const { return lambdas_[0]; }
  double lambda2() const { return lambdas_[1]; }

  double mean_curvature() const { return std::accumulate(lambdas_.begin(), lambdas_.end(), 0.0); }

  double norm_squared() const {
    double a = 0.0;
    for (double l : lambdas_) a += l * l;
    return a;
  }

  double scale() const {
    double m = 0.0;
    for (double l : lambdas_) m = std::max(m, std::abs(l));
    return m;
  }

  /// lambda_1 + lambda_2 > eps * max|lambda_i|; exact zero is rejected.
  bool two_convex() const {
    const double margin = std::numeric_limits<double>::epsilon() * scale();
    return lambdas_[0] + lambdas_[1] > margin;
  }

  CurvatureSpectrum scaled(double c) const {
    std::vector<double> v = lambdas_;
    for (double& l : v) l *= c;
    return CurvatureSpectrum(std::move(v));
  }

 private:
  std::vector<double> lambdas_;
};

namespace detail {

inline void require_dimension(const CurvatureSpectrum& spec, Dimension dim) {
  if (static_cast<int>(spec.size()) != dim.value()) {
    throw InvalidArgument("spectrum has " + std::to_string(spec.size()) +
                          " entries, dimension is " + std::to_string(dim.value()));
  }
}

inline void require_two_convex(const CurvatureSpectrum& spec) {
  if (!spec.two_convex()) {
    throw NotTwoConvex("lambda1 + lambda2 = " + std::to_string(spec.lambda1() + spec.lambda2()) +
                       " is not positive");
  }
}

// Order-independent evaluation on raw values; callers guarantee every pair
// sum is positive.
inline double speed_unchecked(std::span<const double> l) {
  double sum = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i)
    for (std::size_t j = i + 1; j < l.size(); ++j) sum += 1.0 / (l[i] + l[j]);
  return 1.0 / sum;
}

inline void speed_gradient_unchecked(std::span<const double> l, std::span<double> out) {
  const double g = speed_unchecked(l);
  for (std::size_t i = 0; i < l.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < l.size(); ++j) {
      if (j == i) continue;
      const double p = l[i] + l[j];
      acc += 1.0 / (p * p);
    }
    out[i] = g * g * acc;
  }
}

}  // namespace detail

/// Normal speed G of the flow at a point with the given principal curvatures.
inline double speed(const CurvatureSpectrum& spec, Dimension dim) {
  detail::require_dimension(spec, dim);
  detail::require_two_convex(spec);
  return detail::speed_unchecked(spec.values());
}

/// dG/d(lambda_i) = G^2 sum_{j != i} 1/(lambda_i + lambda_j)^2, indexed like the
/// sorted spectrum. Every entry lies in (0, 1] on two-convex spectra.
inline std::vector<double> speed_gradient(const CurvatureSpectrum& spec, Dimension dim) {
  detail::require_dimension(spec, dim);
  detail::require_two_convex(spec);
  std::vector<double> dg(spec.size());
  detail::speed_gradient_unchecked(spec.values(), dg);
  return dg;
}

/// G as the ratio prod_{pairs} p / sum_{pairs} prod_{other pairs}. Independent
/// evaluation path used to cross-check speed().
inline double speed_rational_form(const CurvatureSpectrum& spec, Dimension dim) {
  detail::require_dimension(spec, dim);
  detail::require_two_convex(spec);
  std::vector<double> pairs;
  const auto l = spec.values();
  for (std::size_t i = 0; i < l.size(); ++i)
    for (std::size_t j = i + 1; j < l.size(); ++j) pairs.push_back(l[i] + l[j]);

  double numerator = 1.0;
  for (double p : pairs) numerator *= p;
  double denominator = 0.0;
  for (std::size_t skip = 0; skip < pairs.size(); ++skip) {
    double term = 1.0;
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (k != skip) term *= pairs[k];
    denominator += term;
  }
  return numerator / denominator;
}

struct BoundsReport {
  double g = 0.0;
  double lower = 0.0;  // (lambda1 + lambda2) / n
  double upper = 0.0;  // lambda1 + lambda2
  double h_over_g = 0.0;
  bool lower_ok = false;
  bool upper_ok = false;
  /// H >= (n/2) G, i.e. G <= C1 H with C1 = 2/n.
  bool h_ratio_ok = false;
};

/// Checks (l1 + l2)/n <= G <= l1 + l2 and records H/G. Violations are reported,
/// not thrown; a spectrum that is not two-convex reports every check false.
inline BoundsReport check_bounds(const CurvatureSpectrum& spec, Dimension dim) {
  detail::require_dimension(spec, dim);
  BoundsReport r;
  if (!spec.two_convex()) return r;
  const double n = dim.as_double();
  r.g = detail::speed_unchecked(spec.values());
  r.upper = spec.lambda1() + spec.lambda2();
  r.lower = r.upper / n;
  // Relative slack for roundoff in the equality cases (sphere, cylinder).
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(r.g, r.upper);
  r.lower_ok = r.g >= r.lower - slack;
  r.upper_ok = r.g <= r.upper + slack;
  const double h = spec.mean_curvature();
  r.h_over_g = h / r.g;
  r.h_ratio_ok = h >= 0.5 * n * r.g - slack * n;
  return r;
}

struct Sphere {
  double radius;
};
struct Cylinder {
  double radius;
};
using ModelSurface = std::variant<Sphere, Cylinder>;

/// Closed-form speed on round spheres (4/(n(n-1)r)) and cylinders
/// (4/((n-1)(n+2)r)).
inline double model_speed(const ModelSurface& model, Dimension dim) {
  const double n = dim.as_double();
  return std::visit(
      [n](const auto& m) -> double {
        if (!(m.radius > 0.0)) throw InvalidArgument("model radius must be positive");
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          return 4.0 / (n * (n - 1.0) * m.radius);
        } else {
          return 4.0 / ((n - 1.0) * (n + 2.0) * m.radius);
        }
      },
      model);
}

/// Principal curvatures of the model surface, for feeding speed().
inline CurvatureSpectrum model_spectrum(const ModelSurface& model, Dimension dim) {
  const auto n = static_cast<std::size_t>(dim.value());
  return std::visit(
      [n](const auto& m) {
        if (!(m.radius > 0.0)) throw InvalidArgument("model radius must be positive");
        using T = std::decay_t<decltype(m)>;
        std::vector<double> l(n, 1.0 / m.radius);
        if constexpr (std::is_same_v<T, Cylinder>) l[0] = 0.0;
        return CurvatureSpectrum(std::move(l));
      },
      model);
}

struct SliceMaximum {
  std::vector<double> argmax;  // a_1 .. a_{n-1}
  double max_value = 0.0;
  int iterations = 0;
};

/// Maximizes G(0, a_1, ..., a_{n-1}) over the open simplex sum a_i = 1 by
/// projected gradient ascent with backtracking. `start` defaults to a
/// deliberately lopsided interior point.
inline SliceMaximum maximize_on_cylinder_slice(Dimension dim, double tol,
                                               std::vector<double> start = {}) {
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  const auto m = static_cast<std::size_t>(dim.value() - 1);
  if (start.empty()) {
    start.resize(m);
    for (std::size_t i = 0; i < m; ++i) start[i] = static_cast<double>(i + 1);
  }
  if (start.size() != m) throw InvalidArgument("start point must have n-1 entries");
  double total = 0.0;
  for (double a : start) {
    if (!(a > 0.0)) throw InvalidArgument("start point must be strictly positive");
    total += a;
  }
  for (double& a : start) a /= total;

  // Full spectrum buffer: slot 0 holds the fixed zero curvature.
  std::vector<double> lam(m + 1, 0.0);
  std::vector<double> grad(m + 1, 0.0);
  auto value_at = [&](const std::vector<double>& a) {
    std::copy(a.begin(), a.end(), lam.begin() + 1);
    return detail::speed_unchecked(lam);
  };

  std::vector<double> a = std::move(start);
  std::vector<double> trial(m);
  double f = value_at(a);
  double step = 1.0;
  constexpr int kMaxIterations = 100000;
  const double grad_tol = std::min(1e-12, tol * 1e-4);

  for (int it = 0; it < kMaxIterations; ++it) {
    std::copy(a.begin(), a.end(), lam.begin() + 1);
    detail::speed_gradient_unchecked(lam, grad);
    // Project onto the tangent space of the constraint sum a_i = 1.
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += grad[i + 1];
    mean /= static_cast<double>(m);
    std::vector<double> dir(m);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      dir[i] = grad[i + 1] - mean;
      norm2 += dir[i] * dir[i];
    }
    if (std::sqrt(norm2) <= grad_tol) return {a, f, it};

    bool accepted = false;
    for (double t = step; t > 1e-18; t *= 0.5) {
      bool interior = true;
      for (std::size_t i = 0; i < m; ++i) {
        trial[i] = a[i] + t * dir[i];
        if (!(trial[i] > 0.0)) interior = false;
      }
      if (!interior) continue;
      const double ft = value_at(trial);
      if (ft > f && ft >= f + 1e-4 * t * norm2) {
        a = trial;
        f = ft;
        step = std::min(2.0 * t, 1e3);
        accepted = true;
        break;
      }
    }
    // No ascent step is representable any more: we are at the maximum to
    // machine precision.
    if (!accepted) return {a, f, it};
  }
  throw NonConvergence("maximize_on_cylinder_slice: iteration cap reached");
}

}  // namespace gflow
