#include <cmath>

#include <gtest/gtest.h>

#include "isotruss/configurations.hpp"
#include "isotruss/error.hpp"
#include "isotruss/motion.hpp"

using namespace isotruss;

namespace {

double max_drift(const Trajectory& t) {
  double m = 0.0;
  for (std::size_t i = 1; i < t.frames.size(); ++i) {
    m = std::max(m, t.frames[i].step.drift_after.maxCoeff());
  }
  return m;
}

MotionScript one_phase(const std::string& name, double duration, ConstraintGenerator g) {
  MotionScript s;
  s.name = name;
  s.segments.push_back({name, [=](const RobotModel&, const TrussState&) {
                          return std::vector<Phase>{{name, duration, g, {}}};
                        }});
  return s;
}

}  // namespace

TEST(Hull, BasicShapes) {
  const auto hull = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0}});
  EXPECT_EQ(hull.size(), 4u);
  EXPECT_NEAR(signed_hull_distance(hull, {0.5, 0.5}), 0.5, 1e-12);
  EXPECT_NEAR(signed_hull_distance(hull, {2.0, 0.5}), -1.0, 1e-12);
  const auto seg = convex_hull({{0, 0}, {1, 0}});
  EXPECT_EQ(seg.size(), 2u);
  EXPECT_LE(signed_hull_distance(seg, {0.5, 0.0}), 0.0);
  EXPECT_NEAR(signed_hull_distance(seg, {0.5, 0.3}), -0.3, 1e-12);
  EXPECT_NEAR(signed_hull_distance(convex_hull({{1, 1}}), {1, 2}), -1.0, 1e-12);
}

TEST(Stability, SymmetricLocomotionBuild) {
  const auto r = build_locomotion();
  const auto s = stability(r.initial, r.node_masses);
  EXPECT_EQ(s.contacts.size(), 3u);
  EXPECT_GT(s.margin, 0.0);
  EXPECT_NEAR(s.com.y(), 0.0, 1e-12);
  double cy = 0.0;
  for (const auto& p : s.hull) cy += p.y();
  EXPECT_NEAR(cy / static_cast<double>(s.hull.size()), s.com.y(), 1e-12);
}

TEST(Stability, LiftingOneTripodFootLosesSupport) {
  const auto r = build_locomotion();
  TrussState s = r.initial;
  s.x(3 * r.roles.left_foot + 2) += 0.1;
  const auto rep = stability(s, r.node_masses);
  EXPECT_EQ(rep.contacts.size(), 2u);
  EXPECT_LE(rep.margin, 0.0);
  EXPECT_FALSE(rep.stable());
}

TEST(Profile, Trapezoid) {
  EXPECT_DOUBLE_EQ(trapezoid_progress(0.0), 0.0);
  EXPECT_DOUBLE_EQ(trapezoid_progress(1.0), 1.0);
  EXPECT_NEAR(trapezoid_progress(0.5), 0.5, 1e-12);
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double v = trapezoid_progress(i / 100.0);
    EXPECT_GE(v, prev);
    EXPECT_NEAR(v + trapezoid_progress(1.0 - i / 100.0), 1.0, 1e-12);
    prev = v;
  }
}

TEST(Runner, EmptyScriptIsInitialFrame) {
  const auto r = build_solar_array();
  const auto t = run_script(MotionScript{}, r, r.initial);
  ASSERT_EQ(t.frames.size(), 1u);
  EXPECT_TRUE(t.completed());
  EXPECT_EQ(t.final_state().x, r.initial.x);
}

TEST(Runner, MovingAFixedNodeAbortsAtStepZero) {
  const auto r = build_solar_array();
  const auto s = one_phase("bad", 1.0, [&](const PhaseContext&) {
    MotionConstraintSet c;
    c.fixed_nodes = r.roles.ground;
    c.moves = {{r.roles.ground[0], Eigen::Vector3d(0.01, 0, 0)}};
    return c;
  });
  const auto t = run_script(s, r, r.initial);
  ASSERT_FALSE(t.completed());
  EXPECT_EQ(t.abort->code, ErrorCode::Infeasible);
  EXPECT_EQ(t.abort->tick, 0);
  EXPECT_EQ(t.frames.size(), 1u);
}

TEST(Twist, FrameCountAndPerimeters) {
  const auto r = build_solar_array();
  const auto t = run_script(script_twist(TwistPlane::Middle, 30, Rotation::Ccw), r, r.initial);
  ASSERT_TRUE(t.completed()) << t.abort->message;
  const double duration = t.frames.back().time;
  EXPECT_EQ(static_cast<double>(t.frames.size() - 1), std::ceil(duration / 0.05 - 1e-9));
  EXPECT_LT(max_drift(t), 1e-9);
}

TEST(Twist, OneTwentyDegrees) {
  const auto r = build_solar_array();
  const auto t = run_script(script_twist(TwistPlane::Middle, 120, Rotation::Ccw), r, r.initial);
  ASSERT_TRUE(t.completed()) << t.abort->message;
  EXPECT_NEAR(azimuth_change(r.initial, t.final_state(), r.roles.middle, r.roles.ground), 120.0, 2.0);
  EXPECT_LE(std::abs(azimuth_change(r.initial, t.final_state(), r.roles.top, r.roles.top)), 2.0);
}

TEST(Twist, ZeroIsIdentityAndReverseReturns) {
  const auto r = build_solar_array();
  const auto z = run_script(script_twist(TwistPlane::Middle, 0, Rotation::Ccw), r, r.initial);
  EXPECT_EQ(z.frames.size(), 1u);
  auto s = script_twist(TwistPlane::Middle, 40, Rotation::Ccw);
  s.then(script_twist(TwistPlane::Middle, 40, Rotation::Cw));
  const auto t = run_script(s, r, r.initial);
  ASSERT_TRUE(t.completed()) << t.abort->message;
  EXPECT_LT((t.final_state().x - r.initial.x).lpNorm<Eigen::Infinity>(), 1e-3);
  EXPECT_LT((t.final_state().d - r.initial.d).lpNorm<Eigen::Infinity>(), 1e-3);
}

TEST(Squat, TargetOnWrongSideIsEmpty) {
  const auto r = build_solar_array();
  const double h = top_height(r, r.initial);
  EXPECT_TRUE(script_squat_extend(SquatDirection::Up, h - 0.2).segments.size() == 1u);
  const auto t = run_script(script_squat_extend(SquatDirection::Up, h - 0.2), r, r.initial);
  EXPECT_EQ(t.frames.size(), 1u);
  EXPECT_TRUE(t.completed());
}

TEST(Squat, ReachesTargetAndLandsOnLimit) {
  const auto r = build_solar_array();
  const double h = top_height(r, r.initial);
  const auto to = run_script(script_squat_extend(SquatDirection::Down, h - 0.3), r, r.initial);
  ASSERT_TRUE(to.completed()) << to.abort->message;
  EXPECT_NEAR(top_height(r, to.final_state()), h - 0.3, 1e-6);

  const auto full = run_script(script_squat_extend(SquatDirection::Down, std::nullopt), r, r.initial);
  ASSERT_FALSE(full.completed());
  EXPECT_EQ(full.abort->code, ErrorCode::LimitViolation);
  const auto rep = check_feasibility(full.final_state(), r.topology, FeasibilityLimits{});
  EXPECT_TRUE(rep.feasible);
  EXPECT_LT(std::abs(rep.min_margin), 1e-3);
  double prev = h;
  for (const auto& f : full.frames) {
    const double z = top_height(r, f.state);
    EXPECT_LE(z, prev + 1e-12);
    prev = z;
  }
}

TEST(Tilt, ZeroIsIdentityAndAngleIsReached) {
  const auto r = build_solar_array();
  EXPECT_EQ(run_script(script_tilt(TiltAxis::joint(0), 0), r, r.initial).frames.size(), 1u);
  const auto t = run_script(script_tilt(TiltAxis::edge(0, 1), 25), r, r.initial);
  ASSERT_TRUE(t.completed()) << t.abort->message;
  EXPECT_NEAR(tilt_angle_deg(r, t.final_state()), 25.0, 0.5);
  EXPECT_LT(max_drift(t), 1e-9);
}

TEST(Sweep, LimitAndAzimuth) {
  try {
    script_sweep(40);
    FAIL() << "sweep beyond the limit accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LimitViolation);
    EXPECT_NE(std::string(e.what()).find("bending"), std::string::npos);
  }
  const auto r = build_solar_array();
  const auto tilted = run_script(script_tilt(TiltAxis::edge(0, 1), 30), r, r.initial);
  ASSERT_TRUE(tilted.completed());
  const double az0 = normal_azimuth_deg(r, tilted.final_state());
  for (double a : {35.0, -35.0}) {
    const auto t = run_script(script_sweep(a), r, tilted.final_state());
    ASSERT_TRUE(t.completed()) << t.abort->message;
    double d = normal_azimuth_deg(r, t.final_state()) - az0;
    d = std::remainder(d, 360.0);
    EXPECT_NEAR(d, a, 2.0);
  }
}

TEST(Coverage, ArcUnion) {
  EXPECT_NEAR(orientation_coverage({{0, 35}}), 70.0, 1e-12);
  EXPECT_NEAR(orientation_coverage({{0, 35}, {50, 35}}), 120.0, 1e-12);
  EXPECT_NEAR(orientation_coverage({{350, 20}}), 40.0, 1e-12);
  EXPECT_NEAR(orientation_coverage({{0, 200}}), 360.0, 1e-12);
  std::vector<std::pair<double, double>> six;
  for (int k = 0; k < 6; ++k) six.push_back({60.0 * k, 30.0});
  EXPECT_NEAR(orientation_coverage(six), 360.0, 1e-12);
}

TEST(Coverage, TiltSweepCatalogCoversCircle) {
  const auto r = build_solar_array();
  std::vector<std::pair<double, double>> arcs;
  const std::vector<TiltAxis> axes{TiltAxis::joint(0), TiltAxis::joint(1), TiltAxis::joint(2),
                                   TiltAxis::edge(0, 1), TiltAxis::edge(1, 2), TiltAxis::edge(2, 0)};
  for (const auto& a : axes) {
    const auto t = run_script(script_tilt(a, 20), r, r.initial);
    ASSERT_TRUE(t.completed()) << a.describe() << ": " << t.abort->message;
    arcs.push_back({normal_azimuth_deg(r, t.final_state()), 35.0});
  }
  std::vector<double> centres;
  for (const auto& a : arcs) centres.push_back(a.first);
  std::sort(centres.begin(), centres.end());
  for (std::size_t i = 0; i < centres.size(); ++i) {
    const double next = i + 1 < centres.size() ? centres[i + 1] : centres[0] + 360.0;
    EXPECT_NEAR(next - centres[i], 60.0, 1.0);
  }
  EXPECT_NEAR(orientation_coverage(arcs), 360.0, 1e-9);
}

TEST(Heights, JointFrameKeepsGroundAndScalesEdges) {
  const auto r = build_solar_array();
  const Eigen::VectorXd xj = joint_frame_positions(r, r.initial.x);
  for (int n : r.roles.ground) EXPECT_NEAR(xj(3 * n + 2), 0.0, 1e-9);
  const Eigen::VectorXd L = edge_lengths(xj, r.topology);
  const double side = r.spec.tube_side() + 2.0 * r.spec.joint_offset;
  EXPECT_NEAR(side, 1.8, 1e-4);
  for (Eigen::Index k = 0; k < L.size(); ++k) EXPECT_NEAR(L(k), side, 1e-9);
  const auto h = report_height(r, r.initial);
  EXPECT_NEAR(h.joint, h.scaled * side / 1.8, 1e-6);
}

TEST(Search, FindsBoundary) {
  const auto r = build_solar_array();
  const double h = top_height(r, r.initial);
  const auto res = search_max(
      [&](double drop) { return script_squat_extend(SquatDirection::Down, h - drop); }, 0.0, 3.0,
      0.01, r, r.initial);
  ASSERT_TRUE(res.binding.has_value());
  EXPECT_EQ(res.binding->code, ErrorCode::LimitViolation);
  EXPECT_LE(res.failing - res.value, 0.01);
  EXPECT_GT(res.value, 0.1);
}
