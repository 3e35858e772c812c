#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "gflow/presets.hpp"
#include "gflow/surgery.hpp"

using namespace gflow;

namespace {

StepControl fine_control() {
  StepControl ctl;
  ctl.cfl = 0.1;
  ctl.dt_max = 1e-2;
  ctl.spacing = 1e-2;
  return ctl;
}

NeckParams dumbbell_neck(Dimension d) {
  NeckParams p = NeckParams::defaults(d);
  p.epsilon = 0.1;
  p.L = 10.0;
  p.theta = 0.1;
  p.eta0 = 0.1;
  p.g0 = 5.0;
  return p;
}

}  // namespace

TEST(Thresholds, ChainIsEnforced) {
  EXPECT_NO_THROW(SurgeryThresholds(1.0, 2.0, 3.0));
  EXPECT_THROW(SurgeryThresholds(0.0, 2.0, 3.0), InvalidArgument);
  EXPECT_THROW(SurgeryThresholds(2.0, 2.0, 3.0), InvalidArgument);
  EXPECT_THROW(SurgeryThresholds(1.0, 3.0, 3.0), InvalidArgument);
  try {
    SurgeryThresholds(1.0, 0.5, 3.0);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("threshold chain"), std::string::npos);
  }
  const auto t = SurgeryThresholds::from_omegas(2.5, 2.0, 2.0);
  EXPECT_DOUBLE_EQ(t.g2(), 5.0);
  EXPECT_DOUBLE_EQ(t.g3(), 10.0);
  EXPECT_DOUBLE_EQ(t.k_star(), 5.0);
  EXPECT_THROW(SurgeryThresholds::from_omegas(2.5, 1.0, 2.0), InvalidArgument);
}

TEST(Thresholds, CutRadius) {
  EXPECT_DOUBLE_EQ(cut_radius(5.0, Dimension(3), CutRadiusRule::Primary), 0.4);
  EXPECT_DOUBLE_EQ(cut_radius(5.0, Dimension(3), CutRadiusRule::Alternative), 0.2);
  EXPECT_DOUBLE_EQ(cut_radius(3.0, Dimension(4), CutRadiusRule::Alternative), 1.0);
}

TEST(Classify, ConvexSphereIsDiscardedCylinderRetained) {
  const Dimension d(3);
  FlowState st = make_state({sphere_profile(1.0, 1e-2), cylinder_profile(1.0, 2.0, 1e-2)});
  const auto v = classify_components(st, {}, d);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].verdict, Verdict::DiscardConvex);
  EXPECT_EQ(v[1].verdict, Verdict::Retain);
  EXPECT_EQ(v[1].reason, "not closed");
}

TEST(Loop, SphereEndsConvexWithoutSurgery) {
  const Dimension d(3);
  StepControl ctl;
  ctl.spacing = 2e-2;
  FlowState st = make_state({sphere_profile(1.0, ctl.spacing)});
  NeckParams p = NeckParams::defaults(d);
  p.g0 = 1.0;
  const auto rep = surgery_loop(st, SurgeryThresholds(0.5, 1.0, 2.0), p, ctl, d);
  EXPECT_EQ(rep.verdict, LoopVerdict::Convex);
  EXPECT_EQ(rep.surgeries, 0);
  EXPECT_EQ(rep.final_components, 1);
  EXPECT_TRUE(st.components.empty());
  EXPECT_TRUE(st.log.empty());
}

TEST(Loop, TimeLimit) {
  const Dimension d(3);
  StepControl ctl;
  ctl.spacing = 2e-2;
  FlowState st = make_state({sphere_profile(1.0, ctl.spacing)});
  NeckParams p = NeckParams::defaults(d);
  p.g0 = 1.0;
  LoopOptions opt;
  opt.t_max = 0.1;
  const auto rep = surgery_loop(st, SurgeryThresholds(0.5, 1.0, 2.0), p, ctl, d, opt);
  EXPECT_EQ(rep.verdict, LoopVerdict::TimeLimit);
  EXPECT_GE(rep.t, 0.1);
}

TEST(Loop, DumbbellNeckPinchIsCut) {
  const Dimension d(3);
  const StepControl ctl = fine_control();
  FlowState st = make_state({dumbbell_profile(1.0, 0.3, 8.0, ctl.spacing)});
  const double area0 = total_area(st.curve(0), d);
  const auto th = SurgeryThresholds::from_omegas(2.5, 2.0, 2.0);
  std::vector<PerformResult> done;
  LoopObserver obs;
  obs.on_surgery = [&](const FlowState& s, const PerformResult& r) {
    done.push_back(r);
    for (ComponentId id : r.retained) {
      const ProfileCurve& c = s.curve(id);
      EXPECT_TRUE(c.closed());
      EXPECT_EQ(c.u().front(), 0.0);
      EXPECT_EQ(c.u().back(), 0.0);
    }
  };
  const auto rep = surgery_loop(st, th, dumbbell_neck(d), ctl, d, {}, obs);
  EXPECT_EQ(rep.verdict, LoopVerdict::AllComponentsSpheres);
  ASSERT_EQ(rep.surgeries, 1);
  ASSERT_EQ(done.size(), 1u);
  const PerformResult& r = done[0];
  EXPECT_EQ(r.retained.size(), 2u);
  EXPECT_LT(r.area_after, r.area_before);
  EXPECT_LT(r.area_before, area0);
  EXPECT_NEAR(r.record.r_star, 0.4, 1e-15);
  EXPECT_NEAR(r.record.k_star, 5.0, 1e-15);
  EXPECT_GE(r.record.pre_max_g, th.g3());
  EXPECT_GE(r.record.post_max_g, 0.5 * r.record.k_star);
  EXPECT_LE(r.record.post_max_g, 2.0 * r.record.k_star);
  // The cuts straddle the waist at the centre of the profile.
  EXPECT_LT(r.record.modified_interval.lo, 0.0);
  EXPECT_GT(r.record.modified_interval.hi, 0.0);
  EXPECT_EQ(st.log.size(), 1u);
  EXPECT_EQ(rep.final_components, 2);
}

TEST(Loop, SurgeryBudgetAborts) {
  const Dimension d(3);
  const StepControl ctl = fine_control();
  FlowState st = make_state({dumbbell_profile(1.0, 0.3, 8.0, ctl.spacing)});
  LoopOptions opt;
  opt.max_surgeries = 0;
  EXPECT_THROW(surgery_loop(st, SurgeryThresholds::from_omegas(2.5, 2.0, 2.0), dumbbell_neck(d), ctl, d, opt),
               AbortTooManySurgeries);
}
