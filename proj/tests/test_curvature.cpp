#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gflow/curvature.hpp"

using namespace gflow;

namespace {

// Direct pair sum, kept independent of the library's evaluation order.
double pair_sum_speed(const std::vector<double>& l) {
  double acc = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i)
    for (std::size_t j = i + 1; j < l.size(); ++j) acc += 1.0 / (l[i] + l[j]);
  return 1.0 / acc;
}

std::vector<double> random_two_convex(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> d(-1.0, 3.0);
  for (;;) {
    std::vector<double> l(static_cast<std::size_t>(n));
    for (auto& v : l) v = d(rng);
    std::sort(l.begin(), l.end());
    if (l[0] + l[1] > 1e-2) return l;
  }
}

}  // namespace

TEST(Dimension, RejectsBelowThree) {
  EXPECT_THROW(Dimension(2), InvalidArgument);
  EXPECT_NO_THROW(Dimension(3));
}

TEST(Dimension, ModelRatios) {
  EXPECT_DOUBLE_EQ(Dimension(3).cylinder_h_over_g(), 5.0);
  EXPECT_DOUBLE_EQ(Dimension(3).sphere_h_over_g(), 4.5);
  EXPECT_NEAR(Dimension(3).unit_sphere_area(), 4.0 * M_PI, 1e-13);
}

TEST(Spectrum, SortsAndChecksTwoConvexity) {
  const CurvatureSpectrum s{3.0, -0.5, 1.0};
  EXPECT_EQ(s.lambda1(), -0.5);
  EXPECT_EQ(s[2], 3.0);
  EXPECT_TRUE(s.two_convex());
  EXPECT_FALSE((CurvatureSpectrum{-1.0, 1.0, 2.0}).two_convex());
  EXPECT_THROW((CurvatureSpectrum{1.0, 2.0}), InvalidArgument);
  EXPECT_THROW((CurvatureSpectrum{1.0, NAN, 2.0}), InvalidArgument);
}

TEST(Speed, CylinderSliceValue) {
  EXPECT_NEAR(speed(CurvatureSpectrum{0.0, 0.5, 0.5}, Dimension(3)), 0.2, 1e-15);
  for (int n = 3; n <= 7; ++n) {
    std::vector<double> l(static_cast<std::size_t>(n), 1.0 / (n - 1));
    l[0] = 0.0;
    const double want = 4.0 / ((n - 1.0) * (n - 1.0) * (n + 2.0));
    EXPECT_NEAR(speed(CurvatureSpectrum(l), Dimension(n)), want, 1e-15) << n;
  }
}

TEST(Speed, ModelSurfaces) {
  for (int n = 3; n <= 6; ++n) {
    const Dimension d(n);
    for (double r : {0.3, 1.0, 2.5}) {
      EXPECT_NEAR(speed(model_spectrum(Sphere{r}, d), d), model_speed(Sphere{r}, d), 1e-14);
      EXPECT_NEAR(speed(model_spectrum(Cylinder{r}, d), d), model_speed(Cylinder{r}, d), 1e-14);
    }
  }
  EXPECT_THROW(model_speed(Sphere{0.0}, Dimension(3)), InvalidArgument);
}

TEST(Speed, RejectsBadInput) {
  EXPECT_THROW(speed(CurvatureSpectrum{-1.0, 1.0, 2.0}, Dimension(3)), NotTwoConvex);
  EXPECT_THROW(speed(CurvatureSpectrum{0.0, 0.0, 1.0}, Dimension(3)), NotTwoConvex);
  EXPECT_THROW(speed(CurvatureSpectrum{1.0, 1.0, 1.0, 1.0}, Dimension(3)), InvalidArgument);
}

TEST(Speed, MatchesPairSumAndIsHomogeneous) {
  std::mt19937_64 rng(7);
  for (int n = 3; n <= 6; ++n) {
    const Dimension d(n);
    for (int k = 0; k < 500; ++k) {
      const auto l = random_two_convex(rng, n);
      const CurvatureSpectrum s(l);
      const double g = speed(s, d);
      EXPECT_NEAR(g, pair_sum_speed(l), 1e-13 * g);
      EXPECT_NEAR(speed(s.scaled(3.7), d), 3.7 * g, 1e-13 * g);
      EXPECT_NEAR(speed_rational_form(s, d), g, 1e-12 * g);
    }
  }
}

TEST(Speed, GradientEulerIdentityAndFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int n = 3; n <= 5; ++n) {
    const Dimension d(n);
    for (int k = 0; k < 300; ++k) {
      const auto l = random_two_convex(rng, n);
      const CurvatureSpectrum s(l);
      const auto grad = speed_gradient(s, d);
      // Degree-one homogeneity: sum lambda_i dG/dlambda_i = G.
      double euler = 0.0;
      for (std::size_t i = 0; i < l.size(); ++i) euler += l[i] * grad[i];
      EXPECT_NEAR(euler, speed(s, d), 1e-12 * speed(s, d));
      for (std::size_t i = 0; i < l.size(); ++i) {
        EXPECT_GT(grad[i], 0.0);
        EXPECT_LE(grad[i], 1.0);
        const double h = 1e-6;
        auto a = l, b = l;
        a[i] += h;
        b[i] -= h;
        const double fd = (pair_sum_speed(a) - pair_sum_speed(b)) / (2 * h);
        EXPECT_NEAR(fd, grad[i], 1e-5 * grad[i] + 1e-9);
      }
    }
  }
}

TEST(Bounds, UpperBoundHoldsEverywhere) {
  std::mt19937_64 rng(3);
  for (int n = 3; n <= 5; ++n) {
    for (int k = 0; k < 500; ++k) {
      const auto r = check_bounds(CurvatureSpectrum(random_two_convex(rng, n)), Dimension(n));
      EXPECT_TRUE(r.upper_ok);
      EXPECT_TRUE(r.h_ratio_ok);
    }
  }
}

TEST(Bounds, LowerBoundTightOnThreeSphere) {
  const auto r = check_bounds(CurvatureSpectrum{1.0, 1.0, 1.0}, Dimension(3));
  EXPECT_NEAR(r.g, r.lower, 1e-15);
  EXPECT_TRUE(r.lower_ok);
  EXPECT_NEAR(r.h_over_g, 4.5, 1e-14);
}

TEST(Bounds, LowerBoundFailsOnFourSphere) {
  // G = 1/3 while (l1 + l2)/n = 1/2.
  const auto r = check_bounds(CurvatureSpectrum{1.0, 1.0, 1.0, 1.0}, Dimension(4));
  EXPECT_NEAR(r.g, 1.0 / 3.0, 1e-15);
  EXPECT_FALSE(r.lower_ok);
}

TEST(Bounds, NotTwoConvexReportsAllFalse) {
  const auto r = check_bounds(CurvatureSpectrum{-1.0, 0.5, 2.0}, Dimension(3));
  EXPECT_FALSE(r.lower_ok);
  EXPECT_FALSE(r.upper_ok);
}

TEST(SliceMaximum, EqualEntriesAndClosedFormValue) {
  for (int n = 3; n <= 6; ++n) {
    const auto m = maximize_on_cylinder_slice(Dimension(n), 1e-8);
    for (double a : m.argmax) EXPECT_NEAR(a, 1.0 / (n - 1), 1e-6);
    EXPECT_NEAR(m.max_value, 4.0 / ((n - 1.0) * (n - 1.0) * (n + 2.0)), 1e-10);
  }
}

TEST(SliceMaximum, BruteForceFindsNothingLarger) {
  const auto m = maximize_on_cylinder_slice(Dimension(3), 1e-8, {0.05, 0.95});
  double best = 0.0;
  for (int i = 1; i < 10000; ++i) best = std::max(best, pair_sum_speed({0.0, i * 1e-4, 1.0 - i * 1e-4}));
  EXPECT_LE(best, m.max_value + 1e-15);
}

TEST(SliceMaximum, RejectsBadStart) {
  EXPECT_THROW(maximize_on_cylinder_slice(Dimension(3), 1e-8, {1.0}), InvalidArgument);
  EXPECT_THROW(maximize_on_cylinder_slice(Dimension(3), 1e-8, {0.0, 1.0}), InvalidArgument);
  EXPECT_THROW(maximize_on_cylinder_slice(Dimension(3), 0.0), InvalidArgument);
}
