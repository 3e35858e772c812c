#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "gflow/errors.hpp"

namespace gflow {

/// Natural cubic interpolating spline on strictly increasing knots.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> knots, std::vector<double> values)
      : t_(std::move(knots)), y_(std::move(values)) {
    const std::size_t n = t_.size();
    if (n < 2 || y_.size() != n) throw InvalidArgument("spline needs >= 2 matching knots and values");
    for (std::size_t i = 1; i < n; ++i)
      if (!(t_[i] > t_[i - 1])) throw InvalidArgument("spline knots must be strictly increasing");

    m_.assign(n, 0.0);
    if (n == 2) return;
    // Thomas algorithm for the second derivatives, natural end conditions.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double h1 = t_[i + 1] - t_[i];
      const double a = h0 / 6.0;
      const double b = (h0 + h1) / 3.0;
      const double cc = h1 / 6.0;
      const double rhs = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = d[i] - c[i] * m_[i + 1];
      if (i == 1) break;
    }
  }

  double operator()(double t) const {
    const std::size_t n = t_.size();
    std::size_t k;
    if (t <= t_.front()) {
      k = 0;
    } else if (t >= t_.back()) {
      k = n - 2;
    } else {
      k = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    }
    const double h = t_[k + 1] - t_[k];
    const double a = (t_[k + 1] - t) / h;
    const double b = (t - t_[k]) / h;
    return a * y_[k] + b * y_[k + 1] +
           ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * h * h / 6.0;
  }

 private:
  std::vector<double> t_;
  std::vector<double> y_;
  std::vector<double> m_;
};

}  // namespace gflow
