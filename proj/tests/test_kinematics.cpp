#include <functional>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "isotruss/configurations.hpp"
#include "isotruss/error.hpp"
#include "isotruss/kinematics.hpp"
#include "support.hpp"

using namespace isotruss;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Aborted;
}

// Ground-fixed equilateral triangle from one 3.65 m tube, apex = node 2.
struct OneTriangle {
  TrussTopology topo = TrussTopology::build(3, {{2, 0, 1}}, {0});
  TrussState state;
  OneTriangle() {
    const double a = 3.65 / 3.0;
    Eigen::VectorXd x(9);
    x << 0, 0, 0, a, 0, 0, a / 2, 0, a * std::sqrt(3.0) / 2;
    state = oracle::consistent_state(topo, x);
  }
};

Eigen::VectorXd random_x(const TrussTopology& topo, const Eigen::VectorXd& base, std::mt19937_64& rng,
                         double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd x = base;
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += u(rng);
  (void)topo;
  return x;
}

}  // namespace

TEST(EdgeLength, Basic) {
  const auto topo = TrussTopology::build(3, {{0, 1, 2}}, {0});
  Eigen::VectorXd x(9);
  x << 0, 0, 0, 3, 4, 0, 0, 4, 0;
  EXPECT_DOUBLE_EQ(edge_lengths(x, topo)(0), 5.0);
  OneTriangle t;
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(edge_lengths(t.state.x, t.topo)(k), 1.21667, 1e-5);
  x.segment<3>(3) = x.segment<3>(0);
  EXPECT_EQ(code_of([&] { edge_lengths(x, topo); }), ErrorCode::DegenerateEdge);
}

TEST(Rigidity, AxisAlignedRow) {
  const auto topo = TrussTopology::build(3, {{0, 1, 2}}, {0});
  Eigen::VectorXd x(9);
  x << 1, 0, 0, 0, 0, 0, 0, 1, 0;
  const Eigen::MatrixXd R = rigidity_matrix(x, topo);
  Eigen::RowVectorXd row(9);
  row << 1, 0, 0, -1, 0, 0, 0, 0, 0;
  EXPECT_TRUE(R.row(0).isApprox(row));
}

TEST(Rigidity, MatchesIndependentJacobian) {
  std::mt19937_64 rng(3);
  const auto robot = build_solar_array();
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = random_x(robot.topology, robot.initial.x, rng, 0.1);
    const Eigen::MatrixXd R = rigidity_matrix(x, robot.topology);
    EXPECT_TRUE(R.topRows(18).isApprox(oracle::length_jacobian(robot.topology, x), 1e-12));
  }
}

TEST(Rigidity, FiniteDifferenceBound) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const auto robot = build_solar_array();
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = random_x(robot.topology, robot.initial.x, rng, 0.1);
    const Eigen::MatrixXd R = rigidity_matrix(x, robot.topology);
    for (double h : {1e-2, 1e-3, 1e-4}) {
      Eigen::VectorXd delta(x.size());
      for (Eigen::Index k = 0; k < delta.size(); ++k) delta(k) = h * g(rng);
      const Eigen::VectorXd err = oracle::lengths(robot.topology, x + delta) -
                                  oracle::lengths(robot.topology, x) - R.topRows(18) * delta;
      EXPECT_LE(err.norm(), 10.0 * delta.squaredNorm());
    }
  }
}

TEST(Rigidity, RigidMotionsAreInNullspace) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  const auto robot = build_solar_array();
  const Eigen::MatrixXd R = rigidity_matrix(robot.initial.x, robot.topology);
  for (int i = 0; i < 10; ++i) {
    const Eigen::Vector3d w(g(rng), g(rng), g(rng)), v(g(rng), g(rng), g(rng));
    Eigen::VectorXd xdot(robot.initial.x.size());
    for (int n = 0; n < robot.topology.node_count(); ++n) {
      xdot.segment<3>(3 * n) = v + w.cross(robot.initial.node(n));
    }
    EXPECT_LT((R * xdot).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(Solve, ApexSlidesAlongBase) {
  OneTriangle t;
  MotionConstraintSet c;
  c.fixed_nodes = {0, 1};
  c.moves = {{2, Eigen::Vector3d(0.1, 0, 0)}};
  const auto sol = solve_velocities(t.state, t.topo, c);
  EXPECT_LT(sol.diagnostics.max_constraint_residual, 1e-10);
  EXPECT_NEAR(sol.xdot(6), 0.1, 1e-12);
  const Eigen::MatrixXd R = rigidity_matrix(t.state.x, t.topo);
  const Eigen::VectorXd Ldot = R * sol.xdot;
  EXPECT_LT(std::abs(Ldot.sum()), 1e-12);
  EXPECT_NEAR(Ldot(0), 0.05, 1e-12);
  EXPECT_TRUE(sol.xdot.head(6).isZero());
}

TEST(Solve, ApexStraightUpChangesPerimeter) {
  // with the base fixed the apex stays on an ellipse
  OneTriangle t;
  MotionConstraintSet c;
  c.fixed_nodes = {0, 1};
  c.moves = {{2, Eigen::Vector3d(0, 0, 0.1)}};
  EXPECT_EQ(code_of([&] { solve_velocities(t.state, t.topo, c); }), ErrorCode::Infeasible);
}

TEST(Solve, MoveOnFixedNodeIsInfeasible) {
  OneTriangle t;
  MotionConstraintSet c;
  c.fixed_nodes = {0, 1};
  c.moves = {{0, Eigen::Vector3d(0.1, 0, 0)}};
  EXPECT_EQ(code_of([&] { solve_velocities(t.state, t.topo, c); }), ErrorCode::Infeasible);
}

TEST(Solve, AgreesWithNullspaceOracle) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 100; ++i) {
    const auto p = oracle::random_problem(rng);
    const auto ref = oracle::nullspace_solve(p);
    ASSERT_TRUE(ref.has_value());
    const auto sol = solve_velocities(p.state, p.topology, p.constraints);
    EXPECT_LT((sol.xdot - *ref).lpNorm<Eigen::Infinity>(), 1e-8) << "instance " << i;
    EXPECT_FALSE(sol.diagnostics.rank_deficient);
  }
}

TEST(Solve, DependentRowsAreDropped) {
  OneTriangle t;
  MotionConstraintSet c;
  c.fixed_nodes = {0, 1};
  c.moves = {{2, Eigen::Vector3d(0.1, 0, 0)}};
  c.pinned = {{0, Axes::vertical()}};  // repeats a fixed-node row
  const auto sol = solve_velocities(t.state, t.topo, c);
  EXPECT_GE(sol.diagnostics.dropped_rows, 1);
  EXPECT_NEAR(sol.xdot(6), 0.1, 1e-12);
}

TEST(RollerRates, BlockSolve) {
  const auto inc = incidence(TrussTopology::build(3, {{0, 1, 2}}, {0}));
  EXPECT_TRUE(roller_rates_from_lengths(Eigen::Vector3d(1, -1, 0), inc).isApprox(Eigen::Vector2d(1, 0)));
  const Eigen::VectorXd r = roller_rates_from_lengths(Eigen::Vector3d(0, 1, -1), inc);
  EXPECT_NEAR(r(0), 0.0, 1e-15);
  EXPECT_NEAR(r(1), 1.0, 1e-15);
  EXPECT_EQ(code_of([&] { roller_rates_from_lengths(Eigen::Vector3d(1, 1, 1), inc); }),
            ErrorCode::Reconstruction);
}

TEST(RollerRates, ReconstructionOnSolvedSteps) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 100; ++i) {
    const auto p = oracle::random_problem(rng);
    const auto sol = solve_velocities(p.state, p.topology, p.constraints);
    const auto inc = incidence(p.topology);
    const Eigen::VectorXd ddot = roller_rates(sol.xdot, p.state, p.topology, inc);
    const Eigen::MatrixXd R = oracle::length_jacobian(p.topology, p.state.x);
    EXPECT_LT((inc.active_T * ddot - R * sol.xdot).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(Advance, ZeroRatesKeepState) {
  OneTriangle t;
  const auto r = advance(t.state, t.topo, Eigen::VectorXd::Zero(9), Eigen::VectorXd::Zero(2), 0.05, {});
  EXPECT_EQ(r.state.x, t.state.x);
  EXPECT_EQ(r.state.d, t.state.d);
}

TEST(Advance, ConstantRollerRate) {
  OneTriangle t;
  const auto inc = incidence(t.topo);
  MotionConstraintSet c;
  c.fixed_nodes = {0};
  c.pinned = {{1, Axes{false, true, true}}, {2, Axes{false, true, false}}};
  c.edge_rates = {{0, 0.05}, {1, -0.05}};
  TrussState s = t.state;
  const double dA0 = s.d(0);
  for (int i = 0; i < 100; ++i) {
    const auto sol = solve_velocities(s, t.topo, c);
    const Eigen::VectorXd ddot = roller_rates(sol.xdot, s, t.topo, inc);
    EXPECT_NEAR(ddot(0), 0.05, 1e-9);
    EXPECT_NEAR(ddot(1), 0.0, 1e-9);
    s = advance(s, t.topo, sol.xdot, ddot, 0.01, c).state;
  }
  EXPECT_NEAR(s.d(0) - dA0, 0.050, 1e-9);
  EXPECT_NEAR(edge_lengths(s.x, t.topo).sum(), 3.65, 1e-9);
}

TEST(Advance, RollerContactLimit) {
  OneTriangle t;
  const auto inc = incidence(t.topo);
  MotionConstraintSet c;
  c.fixed_nodes = {0};
  c.pinned = {{1, Axes{false, true, true}}, {2, Axes{false, true, false}}};
  // d_A and d_B close in on each other: L2 shrinks, L1 and L3 grow equally
  c.edge_rates = {{0, 0.025}, {1, -0.05}};
  TrussState s = t.state;
  std::string message;
  try {
    for (int i = 0; i < 1000; ++i) {
      const auto sol = solve_velocities(s, t.topo, c);
      const Eigen::VectorXd dd = roller_rates(sol.xdot, s, t.topo, inc);
      s = integrate_step(s, t.topo, sol.xdot, dd, 0.05, c, FeasibilityLimits{}).state;
    }
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LimitViolation);
    message = e.what();
  }
  EXPECT_NE(message.find("roller-contact"), std::string::npos) << message;
  EXPECT_NEAR(s.d(1) - s.d(0), 0.30, 0.05 * 0.05 + 1e-9);
}

TEST(Feasibility, Margins) {
  OneTriangle t;
  const auto rep = check_feasibility(t.state, t.topo, FeasibilityLimits{});
  EXPECT_TRUE(rep.feasible);
  EXPECT_NEAR(rep.edges[0].upper, 1.825 - 0.02 - 3.65 / 3.0, 1e-12);
  EXPECT_NEAR(rep.edges[0].upper, 0.588, 5e-4);

  TrussState s = t.state;
  s.d << 0.30, 0.30 + 1.675;  // L1 at the contact limit
  const auto at = check_feasibility(s, t.topo, FeasibilityLimits{});
  EXPECT_TRUE(at.feasible);
  EXPECT_TRUE(at.at_limit);
  EXPECT_NEAR(at.edges[0].lower, 0.0, 1e-12);

  s.d << 1.90, 1.90 + 0.875;
  const auto over = check_feasibility(s, t.topo, FeasibilityLimits{});
  EXPECT_FALSE(over.feasible);
  EXPECT_LT(over.edges[0].upper, 0.0);

  s.d << 1.0, 0.9;
  EXPECT_FALSE(check_feasibility(s, t.topo, FeasibilityLimits{}).ordering_ok);
}

TEST(Drift, ProjectionHoldsPerimeterOnSolarJog) {
  const auto robot = build_solar_array();
  const auto inc = incidence(robot.topology);
  TrussState s = robot.initial;
  MotionConstraintSet c;
  c.fixed_nodes = robot.roles.ground;
  c.centroid_moves.push_back({robot.roles.top, {}, Eigen::Vector3d(0, 0, 0.02)});
  for (int i = 0; i < 40; ++i) {
    const auto sol = solve_velocities(s, robot.topology, c);
    const Eigen::VectorXd ddot = roller_rates(sol.xdot, s, robot.topology, inc);
    const auto r = advance(s, robot.topology, sol.xdot, ddot, 0.05, c);
    EXPECT_LT(r.diagnostics.drift_before.maxCoeff(), 1e-6);
    EXPECT_LT(r.diagnostics.drift_after.maxCoeff(), 1e-9);
    s = r.state;
  }
  const Eigen::VectorXd L = edge_lengths(s.x, robot.topology);
  EXPECT_LT((L - implied_lengths(s, robot.topology)).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(FiniteDifference, SlopeIsTwo) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  const auto robot = build_solar_array();
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = random_x(robot.topology, robot.initial.x, rng, 0.1);
    Eigen::VectorXd dir(x.size());
    for (Eigen::Index k = 0; k < dir.size(); ++k) dir(k) = g(rng);
    const double slope =
        oracle::fd_slope(robot.topology, x, rigidity_matrix(x, robot.topology), dir.normalized(), 1e-2, 4);
    EXPECT_NEAR(slope, 2.0, 0.1);
  }
}
