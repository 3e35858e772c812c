#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gflow/presets.hpp"
#include "gflow/profile.hpp"
#include "gflow/spline.hpp"

using namespace gflow;

namespace {

// Sphere of radius r sampled at a smoothly non-uniform set of polar angles.
ProfileCurve warped_sphere(double r, int segments) {
  std::vector<double> x, u;
  for (int j = 0; j <= segments; ++j) {
    const double xi = static_cast<double>(j) / segments;
    const double th = M_PI * (xi + 0.1 * std::sin(2 * M_PI * xi));
    x.push_back(-r * std::cos(th));
    u.push_back(j == 0 || j == segments ? 0.0 : r * std::sin(th));
  }
  return ProfileCurve(x, u, EndKind::Pole, EndKind::Pole);
}

double worst_curvature_error(const ProfileCurve& c, double r) {
  double e = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    e = std::max(e, std::abs(c.lambda_profile()[i] * r - 1.0));
    e = std::max(e, std::abs(c.lambda_rot()[i] * r - 1.0));
  }
  return e;
}

}  // namespace

TEST(Spline, InterpolatesKnotsAndLines) {
  const CubicSpline line({0.0, 0.5, 1.7, 3.0}, {1.0, 2.0, 4.4, 7.0});
  EXPECT_NEAR(line(1.0), 3.0, 1e-14);
  EXPECT_NEAR(line(2.2), 5.4, 1e-14);
  const CubicSpline sine({0.0, 0.3, 0.9, 1.2, 2.0}, {0.0, std::sin(0.3), std::sin(0.9), std::sin(1.2), std::sin(2.0)});
  EXPECT_NEAR(sine(0.9), std::sin(0.9), 1e-15);
  EXPECT_THROW(CubicSpline({0.0, 0.0, 1.0}, {1.0, 2.0, 3.0}), InvalidArgument);
  EXPECT_THROW(CubicSpline({0.0}, {1.0}), InvalidArgument);
}

TEST(ProfileCurve, RejectsDegenerateInput) {
  EXPECT_THROW(ProfileCurve({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}, EndKind::Pole, EndKind::Pole), CurveTooShort);
  EXPECT_THROW(ProfileCurve({0.0, 1.0, 2.0, 3.0, 4.0}, {1.0, 1.0, 0.0, 1.0, 1.0}, EndKind::Mirror, EndKind::Mirror),
               DegenerateRadius);
}

TEST(ProfileCurve, SphereGeometry) {
  const auto c = sphere_profile(1.5, 1e-2);
  EXPECT_TRUE(c.closed());
  EXPECT_NEAR(c.length(), M_PI * 1.5, 1e-12);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(std::hypot(c.x()[i], c.u()[i]), 1.5, 1e-12);
  EXPECT_LT(worst_curvature_error(c, 1.5), 1e-4);
  // Volume of S^3 of radius 1.5 is 2 pi^2 r^3.
  EXPECT_NEAR(total_area(c, Dimension(3)), 2 * M_PI * M_PI * std::pow(1.5, 3), 1e-3);
}

TEST(ProfileCurve, CylinderGeometry) {
  const auto c = cylinder_profile(0.7, 5.0, 1e-2);
  EXPECT_FALSE(c.pole_start());
  EXPECT_FALSE(c.pole_end());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(c.lambda_profile()[i], 0.0, 1e-12);
    EXPECT_NEAR(c.lambda_rot()[i], 1.0 / 0.7, 1e-12);
  }
  EXPECT_NEAR(total_area(c, Dimension(3)), 4 * M_PI * 0.7 * 0.7 * 5.0, 1e-10);
  const NodeFields f = evaluate_nodes(c, Dimension(3));
  EXPECT_FALSE(f.first_bad);
  EXPECT_NEAR(f.max_g(), 0.4 / 0.7, 1e-12);
}

TEST(ProfileCurve, CurvatureConvergesOnNonUniformSphere) {
  const double coarse = worst_curvature_error(warped_sphere(1.0, 200), 1.0);
  const double fine = worst_curvature_error(warped_sphere(1.0, 400), 1.0);
  EXPECT_LT(fine, 1e-3);
  EXPECT_GT(coarse / fine, 3.0);
}

TEST(ProfileCurve, PointQueries) {
  const auto c = sphere_profile(1.0, 1e-2);
  const Dimension d(3);
  const auto pole = curvatures_at(c, 0.0, d);
  EXPECT_NEAR(pole.lambda1(), 1.0, 1e-3);
  EXPECT_NEAR(mean_curvature_at(c, 0.5 * c.length(), d), 3.0, 1e-3);
  EXPECT_THROW(curvatures_at(c, c.length() + 1.0, d), OutOfRange);
  EXPECT_NEAR(intrinsic_distance(c, 0.2, 1.0), 0.8, 1e-15);
  EXPECT_THROW(intrinsic_distance(c, -1.0, 1.0), OutOfRange);
  const std::size_t k = c.nearest_node(1.0);
  EXPECT_LE(std::abs(c.s()[k] - 1.0), 0.5 * 1e-2 + 1e-12);
  EXPECT_NEAR(c.interpolate(c.s(), 1.234), 1.234, 1e-12);
}

TEST(Resample, UniformAndIdempotent) {
  const auto w = warped_sphere(1.0, 300);
  const auto a = resample(w, 1e-2);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_NEAR(a.s()[i] - a.s()[i - 1], a.length() / (a.size() - 1), 1e-10);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::hypot(a.x()[i], a.u()[i]), 1.0, 1e-6);
  const auto b = resample(a, 1e-2);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a.x()[i], b.x()[i], 1e-9);
    EXPECT_NEAR(a.u()[i], b.u()[i], 1e-9);
  }
  EXPECT_EQ(b.u().front(), 0.0);
  EXPECT_EQ(b.u().back(), 0.0);
  EXPECT_THROW(resample(a, 0.0), InvalidArgument);
}

TEST(Resample, KeepsMirrorEnds) {
  const auto c = resample(cylinder_profile(1.0, 3.0, 2e-2), 1e-2);
  EXPECT_EQ(c.start_kind(), EndKind::Mirror);
  EXPECT_NEAR(c.x().front(), 0.0, 1e-12);
  EXPECT_NEAR(c.x().back(), 3.0, 1e-12);
  for (double u : c.u()) EXPECT_NEAR(u, 1.0, 1e-12);
}

TEST(Presets, DumbbellIsTwoConvexAndSymmetric) {
  const auto c = dumbbell_profile(1.0, 0.3, 8.0, 1e-2);
  EXPECT_TRUE(c.closed());
  const NodeFields f = evaluate_nodes(c, Dimension(3));
  EXPECT_FALSE(f.first_bad);
  EXPECT_NEAR(c.x().front(), -c.x().back(), 1e-9);
  // Waist radius at the centre, bulbs of radius about 1.
  EXPECT_NEAR(c.interpolate(c.u(), 0.5 * c.length()), 0.3, 5e-3);
  EXPECT_NEAR(c.max_u(), 1.0, 2e-2);
  EXPECT_GT(f.lambda1[f.argmax_g()], -0.1 * f.max_g());
}

TEST(Presets, ChainHasOneBarPerWaist) {
  const auto c = chain_profile(ChainShape{1.0, {0.3, 0.33}, 8.0}, 1e-2);
  EXPECT_TRUE(c.closed());
  EXPECT_FALSE(evaluate_nodes(c, Dimension(3)).first_bad);
  EXPECT_NEAR(c.x().back() - c.x().front(), 2 * 8.0 + 2.0, 0.05);
}
