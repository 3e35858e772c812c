#include <cmath>

#include <gtest/gtest.h>

#include "gflow/flow.hpp"
#include "gflow/presets.hpp"

using namespace gflow;

TEST(StepControl, Validation) {
  StepControl c;
  EXPECT_NO_THROW(c.validate());
  c.cfl = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = StepControl{};
  c.spacing = -1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(StepControl, DtIsTheSmallestLimit) {
  StepControl c;
  c.cfl = 0.1;
  c.dt_max = 1e-2;
  EXPECT_DOUBLE_EQ(select_dt(1.0, 1e-2, c), 1e-5);
  EXPECT_DOUBLE_EQ(select_dt(1e3, 1.0, c), 0.1 / 1e6);
  EXPECT_DOUBLE_EQ(select_dt(1e-3, 10.0, c), 1e-2);
}

TEST(Oracles, ClosedForms) {
  const Dimension d3(3), d4(4);
  EXPECT_NEAR(oracle_radius(Sphere{}, 1.0, d3, 0.3), std::sqrt(1.0 - 0.4), 1e-15);
  EXPECT_NEAR(oracle_radius(Cylinder{}, 1.0, d3, 0.5), std::sqrt(0.6), 1e-15);
  EXPECT_NEAR(oracle_radius(Sphere{}, 2.0, d4, 0.6), std::sqrt(4.0 - 0.4), 1e-15);
  EXPECT_NEAR(extinction_time(Sphere{}, 1.0, d3), 0.75, 1e-15);
  EXPECT_NEAR(extinction_time(Cylinder{}, 1.0, d3), 1.25, 1e-15);
  EXPECT_THROW(oracle_radius(Sphere{}, 1.0, d3, 0.75), PastExtinction);
}

TEST(Flow, SphereTracksShrinkingLaw) {
  const Dimension d(3);
  StepControl ctl;
  ctl.spacing = 2e-2;
  FlowState st = make_state({sphere_profile(1.0, ctl.spacing)});
  double worst = 0.0;
  run_until(st, ctl, d, StopAtTime{0.3}, [&](const FlowState& s, const StepInfo&) {
    const double want = std::sqrt(1.0 - 4.0 * s.t / 3.0);
    worst = std::max(worst, std::abs(sphere_radius(s.curve(0)) - want) / want);
  });
  EXPECT_NEAR(st.t, 0.3, 1e-12);
  EXPECT_LT(worst, 1e-3);
}

TEST(Flow, FourDimensionalSphere) {
  const Dimension d(4);
  StepControl ctl;
  ctl.spacing = 2e-2;
  FlowState st = make_state({sphere_profile(1.0, ctl.spacing)});
  run_until(st, ctl, d, StopAtTime{0.5}, {});
  // r^2 = 1 - 8t/(n(n-1)) with n = 4.
  EXPECT_NEAR(sphere_radius(st.curve(0)), std::sqrt(1.0 - 2.0 / 3.0 * 0.5), 1e-3);
}

TEST(Flow, CylinderTracksShrinkingLaw) {
  const Dimension d(3);
  StepControl ctl;
  ctl.spacing = 2e-2;
  FlowState st = make_state({cylinder_profile(1.0, 3.0, ctl.spacing)});
  run_until(st, ctl, d, StopAtTime{0.4}, {});
  const ProfileCurve& c = st.curve(0);
  const double want = std::sqrt(1.0 - 0.8 * 0.4);
  for (double u : c.u()) EXPECT_NEAR(u, want, 1e-4);
  EXPECT_NEAR(c.x().front(), 0.0, 1e-12);
  EXPECT_NEAR(c.x().back(), 3.0, 1e-12);
}

TEST(Flow, StopConditions) {
  const Dimension d(3);
  StepControl ctl;
  ctl.spacing = 2e-2;
  FlowState st = make_state({sphere_profile(1.0, ctl.spacing)});
  EXPECT_EQ(run_until(st, ctl, d, StopAtMaxG{0.5}), StopReason::MaxGReached);
  EXPECT_EQ(st.step, 0);
  EXPECT_EQ(run_until(st, ctl, d, StopAtMaxG{1.0}), StopReason::MaxGReached);
  EXPECT_GE(max_speed(st, d), 1.0);
  EXPECT_EQ(run_until(st, ctl, d, StopAtMinRadius{0.6}), StopReason::MinRadiusReached);
  EXPECT_LT(min_component_radius(st), 0.6);
  FlowState empty;
  EXPECT_EQ(run_until(empty, ctl, d, StopAtTime{1.0}), StopReason::NoComponents);
}

TEST(Flow, HistoryStaysBounded) {
  const Dimension d(3);
  StepControl ctl;
  ctl.spacing = 5e-2;
  FlowState st = make_state({sphere_profile(1.0, ctl.spacing)});
  run_until(st, ctl, d, StopAtTime{0.5}, {});
  EXPECT_GT(st.step, 1000);
  EXPECT_LE(st.history.archive().size(), 512u);
  EXPECT_EQ(st.history.recent().size(), 3u);
  EXPECT_EQ(st.history.earliest_time(), 0.0);
  EXPECT_EQ(st.history.recent().back().step, st.step);
}

TEST(Identities, NeedThreeConsecutiveSnapshots) {
  FlowState st = make_state({sphere_profile(1.0, 2e-2)});
  EXPECT_THROW(verify_evolution_identities(st, Dimension(3)), InsufficientHistory);
}

TEST(Identities, SphereResidualsAndAreaRate) {
  const Dimension d(3);
  StepControl ctl;
  ctl.spacing = 1e-2;
  FlowState st = make_state({sphere_profile(1.0, ctl.spacing)});
  step(st, ctl, d);
  step(st, ctl, d);
  const auto r = verify_evolution_identities(st, d);
  EXPECT_LT(r.max_r1, 1e-4);
  // dA/dt = -G H A on the unit 3-sphere: -(2/3)(3)(2 pi^2).
  EXPECT_NEAR(r.area_rate, -4.0 * M_PI * M_PI, 1e-3 * 4.0 * M_PI * M_PI);
  EXPECT_LT(r.rel_r2, 1e-3);
}

TEST(Identities, LaplacianOfQuadraticOnCylinder) {
  // On a cylinder the Laplacian of f(s) is f''(s).
  const auto c = cylinder_profile(1.0, 2.0, 1e-2);
  std::vector<double> f(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) f[i] = c.s()[i] * c.s()[i];
  const auto lap = surface_laplacian(c, f, Dimension(3));
  for (std::size_t i = 1; i + 1 < c.size(); ++i) EXPECT_NEAR(lap[i], 2.0, 1e-8);
}
