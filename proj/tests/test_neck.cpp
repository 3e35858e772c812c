#include <cmath>

#include <gtest/gtest.h>

#include "gflow/flow.hpp"
#include "gflow/neck.hpp"
#include "gflow/presets.hpp"

using namespace gflow;

namespace {

// A cylinder flowed long enough that the backward window is covered.
FlowState flowed_cylinder(double t_end) {
  StepControl ctl;
  ctl.spacing = 2e-2;
  FlowState st = make_state({cylinder_profile(1.0, 20.0, ctl.spacing)});
  run_until(st, ctl, Dimension(3), StopAtTime{t_end}, {});
  return st;
}

NeckParams cylinder_params(const FlowState& st) {
  NeckParams p = NeckParams::defaults(Dimension(3));
  p.g0 = 0.5 * max_speed(st, Dimension(3));
  return p;
}

}  // namespace

TEST(NeckScales, ClosedForms) {
  EXPECT_NEAR(r_hat(2.0, Dimension(3)), 0.5, 1e-15);
  EXPECT_NEAR(r_hat(1.0, Dimension(4)), 3.0, 1e-15);
  EXPECT_NEAR(d_sharp(1.0, Dimension(3)), 1.0 / 8.0, 1e-15);
  EXPECT_NEAR(d_sharp(2.0, Dimension(4)), 1.0 / (2.0 * 9.0 * 4.0 * 2.0), 1e-15);
  EXPECT_NEAR(derived_rho_coefficient(Dimension(3)), 0.8, 1e-15);
  const auto w = surgery_free_window_from_K(2.0, 5.0);
  EXPECT_NEAR(w.radius, 1.0 / 80.0, 1e-15);
  EXPECT_NEAR(w.duration, 1.0 / 400.0, 1e-15);
  EXPECT_THROW(r_hat(0.0, Dimension(3)), InvalidArgument);
}

TEST(NeckParams, Validation) {
  NeckParams p;
  EXPECT_NO_THROW(p.validate());
  p.epsilon = 0.3;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = NeckParams{};
  p.L = 9.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = NeckParams{};
  p.d_sharp = 0.05;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(Nd1, CylinderPassesSphereFails) {
  const Dimension d(3);
  FlowState cyl = make_state({cylinder_profile(0.5, 4.0, 1e-2)});
  NeckParams p;
  p.g0 = 0.2;
  const auto r = check_nd1(cyl, {0, 2.0}, p, d);
  EXPECT_NEAR(r.g, 0.8, 1e-12);
  EXPECT_TRUE(r.passes);
  p.g0 = 0.9;
  EXPECT_FALSE(check_nd1(cyl, {0, 2.0}, p, d).passes);

  FlowState sph = make_state({sphere_profile(1.0, 1e-2)});
  p.g0 = 0.1;
  const auto s = check_nd1(sph, {0, 1.0}, p, d);
  EXPECT_NEAR(s.l1_over_g, 1.5, 1e-3);
  EXPECT_FALSE(s.passes);
}

TEST(Nbhd, NeedsHistoryAndRespectsSurgeryLog) {
  const Dimension d(3);
  FlowState st = make_state({cylinder_profile(1.0, 20.0, 2e-2)});
  NeckParams p;
  EXPECT_THROW(build_nbhd(st, {0, 10.0}, p, d), InsufficientHistory);
  p.theta = 0.0;
  const auto nb = build_nbhd(st, {0, 10.0}, p, d);
  // r_hat = 1/G = 2.5 on the unit cylinder; the ball is clipped to the domain.
  EXPECT_NEAR(nb.spatial_radius, 25.0, 1e-9);
  EXPECT_NEAR(nb.axial.lo, 0.0, 1e-12);
  EXPECT_NEAR(nb.axial.hi, 20.0, 1e-12);

  SurgeryLog log;
  EXPECT_TRUE(surgery_free(nb, log));
  SurgeryRecord far;
  far.time = 0.0;
  far.modified_interval = {1000.0, 1001.0};
  log.append(far);
  EXPECT_TRUE(surgery_free(nb, log));
  SurgeryRecord near = far;
  near.modified_interval = {5.0, 6.0};
  log.append(near);
  EXPECT_FALSE(surgery_free(nb, log));
}

TEST(Detect, CylinderIsOneCertifiedRegion) {
  const FlowState st = flowed_cylinder(0.6);
  const auto necks = detect(st, cylinder_params(st), st.log, Dimension(3));
  ASSERT_EQ(necks.size(), 1u);
  const NeckRegion& n = necks[0];
  EXPECT_NEAR(n.s_a, 0.0, 1e-12);
  EXPECT_NEAR(n.s_b, 20.0, 1e-9);
  EXPECT_NEAR(n.mean_radius, std::sqrt(1.0 - 0.8 * 0.6), 1e-4);
  EXPECT_LT(n.radius_deviation, 1e-6);
  EXPECT_LT(n.axis_deviation, 1e-9);
  EXPECT_TRUE(n.certified_shrinking);
  EXPECT_GT(n.shrinking_samples, 0);
  EXPECT_LT(n.worst_shrinking_error, 1e-3);
}

TEST(Detect, WrongShrinkingLawIsNotCertified) {
  const FlowState st = flowed_cylinder(0.6);
  NeckParams p = cylinder_params(st);
  p.rho_coefficient = 4.0;
  const auto necks = detect(st, p, st.log, Dimension(3));
  ASSERT_EQ(necks.size(), 1u);
  EXPECT_FALSE(necks[0].certified_shrinking);
}

TEST(Detect, SphereHasNoNecks) {
  StepControl ctl;
  ctl.spacing = 2e-2;
  FlowState st = make_state({sphere_profile(1.0, ctl.spacing)});
  run_until(st, ctl, Dimension(3), StopAtTime{0.3}, {});
  NeckParams p;
  p.g0 = 0.1;
  EXPECT_TRUE(detect(st, p, st.log, Dimension(3)).empty());
}

TEST(Dichotomy, ConstantsMatchDirectEvaluation) {
  for (double c : {0.5, 1.0, 2.0}) {
    for (double eta : {0.5, 1.0}) {
      const double alpha = (std::exp(c * M_PI / eta) - 1.0) / c;
      EXPECT_NEAR(dichotomy_alpha0(c, eta), alpha, 1e-12 * alpha);
      EXPECT_NEAR(dichotomy_gamma0(c, eta), 1.0 + c * alpha, 1e-12 * alpha);
    }
  }
}

TEST(Dichotomy, SphereIsConvexDumbbellHasWitness) {
  const Dimension d(3);
  FlowState sph = make_state({sphere_profile(1.0, 1e-2)});
  const auto s = convexity_dichotomy(sph, {0, 1.0}, 1.0, 1.0, 0.01, d);
  EXPECT_EQ(s.outcome, DichotomyOutcome::AllConvex);

  FlowState db = make_state({dumbbell_profile(1.0, 0.3, 8.0, 1e-2)});
  const ProfileCurve& c = db.curve(0);
  std::size_t top = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (std::abs(c.x()[i] + 4.0) < std::abs(c.x()[top] + 4.0)) top = i;
  const auto w = convexity_dichotomy(db, {0, c.s()[top]}, 1.0, 1.0, 0.01, d);
  ASSERT_EQ(w.outcome, DichotomyOutcome::Witness);
  EXPECT_TRUE(w.witness_bound_ok);
  EXPECT_LE(std::abs(w.witness->s - c.s()[top]), w.search_radius);
}

TEST(Dichotomy, HypothesesAreChecked) {
  const Dimension d(3);
  FlowState cyl = make_state({cylinder_profile(1.0, 4.0, 1e-2)});
  EXPECT_THROW(convexity_dichotomy(cyl, {0, 2.0}, 1.0, 1.0, 0.01, d), HypothesisNotMet);
  FlowState sph = make_state({sphere_profile(1.0, 1e-2)});
  EXPECT_THROW(convexity_dichotomy(sph, {0, 1.0}, 1.0, 1.0, 1.0, d), HypothesisNotMet);
}
