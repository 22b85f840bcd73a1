#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "isotruss/topology.hpp"

namespace isotruss {

/// Time-varying configuration. x stacks node positions (3n, m); d holds active
/// roller arc positions (2T, m) measured from each passive unit; perimeter is
/// the tube length of each triangle and pressure (kPa) only feeds the power
/// model.
struct TrussState {
  Eigen::VectorXd x;
  Eigen::VectorXd d;
  Eigen::VectorXd perimeter;
  Eigen::VectorXd pressure;

  Eigen::Vector3d node(int i) const { return x.segment<3>(3 * i); }
};

struct Tolerances {
  double degenerate = 1e-9;   // shortest admissible edge, m
  double feasibility = 1e-8;  // equality-system consistency
  double consistency = 1e-6;  // x-implied vs d-implied edge lengths, m
  double reconstruction = 1e-8;
  double dt = 0.05;           // s
};

struct FeasibilityLimits {
  double min_length = 0.30;      // roller contact, m
  double half_margin = 0.02;     // every edge must satisfy L <= C/2 - margin
  double sweep_limit_deg = 35.0;
};

/// Which Cartesian components a constraint acts on.
struct Axes {
  bool x = true;
  bool y = true;
  bool z = true;

  static constexpr Axes all() { return {true, true, true}; }
  static constexpr Axes horizontal() { return {true, true, false}; }
  static constexpr Axes vertical() { return {false, false, true}; }
  bool operator[](int k) const { return k == 0 ? x : (k == 1 ? y : z); }
};

struct NodeMove {
  int node = 0;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Axes axes = Axes::all();
};

/// Prescribes the velocity of a weighted average of nodes (a plane centroid or
/// the centre of mass). Weights are normalised internally.
struct CentroidMove {
  std::vector<int> nodes;
  std::vector<double> weights;  // empty = uniform
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Axes axes = Axes::all();
};

struct PinnedComponents {
  int node = 0;
  Axes axes = Axes::vertical();
};

/// Constraint specification for one velocity solve. The perimeter rows are
/// always present and are not listed here.
struct MotionConstraintSet {
  std::vector<NodeMove> moves;
  std::vector<int> fixed_nodes;
  std::vector<PinnedComponents> pinned;   // e.g. a node sliding on z = 0
  std::vector<CentroidMove> centroid_moves;
  std::vector<std::pair<int, double>> edge_rates;  // (tube edge, dL/dt)
  bool rigid_edges_locked = true;

  /// Components held at zero velocity (fixed nodes and pinned axes); these
  /// are also held still by the drift projection.
  std::vector<bool> held_components(int node_count) const;
};

struct SolveDiagnostics {
  double objective = 0.0;               // ||R xdot||^2
  double max_constraint_residual = 0.0;
  double kkt_residual = 0.0;
  bool rank_deficient = false;
  int dropped_rows = 0;                 // linearly dependent constraint rows
};

struct VelocitySolution {
  Eigen::VectorXd xdot;
  SolveDiagnostics diagnostics;
};

/// Stacked equality constraints A xdot = b with a block label per row.
struct ConstraintSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<std::string> block;
};

Eigen::VectorXd edge_lengths(const Eigen::VectorXd& x, const TrussTopology& topology,
                             const Tolerances& tol = {});
Eigen::VectorXd virtual_edge_lengths(const Eigen::VectorXd& x, const TrussTopology& topology);

/// Tube edge lengths implied by roller positions: (d_A, d_B - d_A, C - d_B).
Eigen::VectorXd implied_lengths(const TrussState& state, const TrussTopology& topology);

/// State whose roller positions agree with the edge lengths of x.
TrussState state_from_positions(const TrussTopology& topology, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& perimeter,
                                const Eigen::VectorXd& pressure);

/// Rows are (p_i - p_j)/L in node i's block and the negation in node j's
/// block, so that R xdot = Ldot. Tube edges come first, then virtual edges.
Eigen::MatrixXd rigidity_matrix(const Eigen::VectorXd& x, const TrussTopology& topology,
                                const Tolerances& tol = {});

ConstraintSystem constraint_system(const TrussState& state, const TrussTopology& topology,
                                   const MotionConstraintSet& constraints,
                                   const Eigen::MatrixXd& rigidity);

/// Minimises ||R xdot||^2 subject to the move/fixed/perimeter (and optional
/// virtual-edge, centroid, pin, edge-rate) equalities via the KKT system.
VelocitySolution solve_velocities(const TrussState& state, const TrussTopology& topology,
                                  const MotionConstraintSet& constraints,
                                  const Tolerances& tol = {});

/// ddot with B_active_T ddot = Ldot; throws Reconstruction when Ldot changes
/// a perimeter.
Eigen::VectorXd roller_rates_from_lengths(const Eigen::VectorXd& Ldot, const IncidenceMatrices& inc,
                                         const Tolerances& tol = {});

Eigen::VectorXd roller_rates(const Eigen::VectorXd& xdot, const TrussState& state,
                             const TrussTopology& topology, const IncidenceMatrices& inc,
                             const Tolerances& tol = {});

struct StepDiagnostics {
  Eigen::VectorXd drift_before;  // per triangle |sum L(x) - C| / C after the Euler step
  Eigen::VectorXd drift_after;   // same, after projection
  double mismatch_before = 0.0;  // max |L(x) - L(d)|, m
  double mismatch_after = 0.0;
  double correction = 0.0;       // max |dx| applied by the projection, m
  int projection_iterations = 0;
  bool resynchronised = false;   // d was re-derived from the projected positions
  double roller_correction = 0.0; // max |dd| from that resynchronisation, m
};

struct StepResult {
  TrussState state;
  StepDiagnostics diagnostics;
};

/// Euler step of x and d followed by a Gauss-Newton projection of the free
/// node coordinates onto the d-implied edge lengths. When the held components
/// leave those lengths unreachable, the perimeters are restored exactly
/// instead and d is re-derived from the positions. Does not check limits.
StepResult advance(const TrussState& state, const TrussTopology& topology,
                   const Eigen::VectorXd& xdot, const Eigen::VectorXd& ddot, double dt,
                   const MotionConstraintSet& held, const Tolerances& tol = {});

struct EdgeMargin {
  int triangle = -1;
  int edge = -1;  // 0..2 within the triangle
  double lower = 0.0;
  double upper = 0.0;
};

struct FeasibilityReport {
  std::vector<EdgeMargin> edges;
  bool ordering_ok = true;
  bool feasible = true;
  EdgeMargin nearest;        // edge with the smallest margin
  double min_margin = 0.0;
  bool nearest_is_lower = true;
  bool at_limit = false;     // some edge has a margin within 1e-9 m of zero

  std::string describe() const;
};

FeasibilityReport check_feasibility(const TrussState& state, const TrussTopology& topology,
                                    const FeasibilityLimits& limits);

/// advance() followed by a limit check; throws LimitViolation naming the
/// triangle and edge.
StepResult integrate_step(const TrussState& state, const TrussTopology& topology,
                          const Eigen::VectorXd& xdot, const Eigen::VectorXd& ddot, double dt,
                          const MotionConstraintSet& held, const FeasibilityLimits& limits,
                          const Tolerances& tol = {});

}  // namespace isotruss
