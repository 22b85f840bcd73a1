#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isotruss/configurations.hpp"
#include "isotruss/error.hpp"
#include "isotruss/kinematics.hpp"
#include "isotruss/roller.hpp"

namespace isotruss {

// ---------------------------------------------------------------- stability

struct StabilityOptions {
  double contact_tol = 0.01;    // z below which a node touches the ground, m
  double patch_radius = 0.05;   // contact patch around each ground node, m
};

struct StabilityReport {
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  std::vector<int> contacts;
  std::vector<Eigen::Vector2d> hull;  // counter-clockwise
  double margin = 0.0;                // positive = inside the support region
  bool stable() const { return margin > 0.0; }
};

/// Counter-clockwise convex hull (monotone chain); collinear points dropped.
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> points);

/// Signed distance from p to the boundary of hull, positive inside. Point and
/// segment hulls have no interior, so the result is never positive for them.
double signed_hull_distance(const std::vector<Eigen::Vector2d>& hull,
                            const Eigen::Vector2d& p);

StabilityReport stability(const TrussState& state, const Eigen::VectorXd& masses,
                          const StabilityOptions& options = {});

// ---------------------------------------------------------------- scripts

struct PhaseContext {
  const RobotModel& robot;
  const TrussState& state;        // state at the start of this step
  const TrussState& phase_start;
  double t = 0.0;                 // time since phase start, s
  double dt = 0.0;
  double duration = 0.0;

  /// Normalised reference progress at the end of this step.
  double progress_next() const;
};

struct AbortPolicy {
  bool feasibility = true;
  bool stability = false;
  bool rank_deficiency = true;
  bool speed_cap = true;  // roller rate above the unit speed cap
};

using ConstraintGenerator = std::function<MotionConstraintSet(const PhaseContext&)>;

struct Phase {
  std::string name;
  double duration = 0.0;
  ConstraintGenerator generate;
  AbortPolicy abort;
};

/// Expands to phases once the state at which the segment begins is known.
using Planner = std::function<std::vector<Phase>(const RobotModel&, const TrussState&)>;

struct ScriptSegment {
  std::string name;
  Planner plan;
};

struct MotionScript {
  std::string name;
  std::vector<ScriptSegment> segments;

  MotionScript& then(const MotionScript& other);
};

/// Trapezoidal velocity profile mapped to position: s(0)=0, s(1)=1, with
/// acceleration over the first and last `ramp` fraction.
double trapezoid_progress(double tau, double ramp = 0.1);

enum class SquatDirection { Up, Down };
enum class BaseMode { Fixed, Sliding };

struct SquatOptions {
  double speed = 0.02;            // top-plane peak speed, m/s
  double max_travel = 4.0;        // used when no target is given, m
  BaseMode base = BaseMode::Fixed;
};

/// target_height is the top-plane centroid height in the simulation frame.
MotionScript script_squat_extend(SquatDirection direction, std::optional<double> target_height,
                                 const SquatOptions& options = {});

enum class TwistPlane { Top, Middle };
enum class Rotation { Ccw, Cw };

struct TwistOptions {
  double node_speed = 0.02;  // peak tangential speed, m/s
};

MotionScript script_twist(TwistPlane plane, double angle_deg, Rotation direction,
                          const TwistOptions& options = {});

struct TiltAxis {
  enum class Kind { Joint, Edge } kind = Kind::Joint;
  int a = 0;   // index into the top-plane roles
  int b = 1;   // second index for edges

  static TiltAxis joint(int k) { return {Kind::Joint, k, k}; }
  static TiltAxis edge(int i, int j) { return {Kind::Edge, i, j}; }
  std::string describe() const;
};

struct TiltOptions {
  double node_speed = 0.02;
  bool recenter = true;  // hold the middle-plane centroid horizontally
};

MotionScript script_tilt(TiltAxis axis, double angle_deg, const TiltOptions& options = {});

struct SweepOptions {
  double node_speed = 0.02;
  double limit_deg = 35.0;
};

/// Throws LimitViolation when |angle_deg| exceeds the sweep limit.
MotionScript script_sweep(double angle_deg, const SweepOptions& options = {});

struct GaitOptions {
  double lift_height = 0.10;
  std::optional<double> slide_length;  // rear-node slide; default = step length
  double foot_speed = 0.025;
  double com_speed = 0.02;
  double reset_rate = 0.02;            // peak edge-length rate, m/s
  double segment_clamp = 0.25;         // COM target kept this far from segment ends
};

MotionScript script_locomotion_cycle(double step_length = 0.61, const GaitOptions& options = {});

/// Single-step constraint set used for interactive jogs.
MotionConstraintSet jog_constraints(int node, const Eigen::Vector3d& velocity,
                                    const std::vector<int>& fixed_nodes);

// ---------------------------------------------------------------- measures

Eigen::Vector3d centroid(const TrussState& state, const std::vector<int>& nodes);
double top_height(const RobotModel& robot, const TrussState& state);

/// Mean azimuth change (deg, ccw positive) of `nodes` about the vertical axis
/// through the centroid of `pivot` at the start and end states.
double azimuth_change(const TrussState& from, const TrussState& to,
                      const std::vector<int>& nodes, const std::vector<int>& pivot);

/// Unit normal of the top plane, oriented upward.
Eigen::Vector3d top_normal(const RobotModel& robot, const TrussState& state);
double tilt_angle_deg(const RobotModel& robot, const TrussState& state);
/// Azimuth (deg) of the top normal projected on the ground plane.
double normal_azimuth_deg(const RobotModel& robot, const TrussState& state);

/// Union length (deg) of azimuth arcs given as (centre, half-width) on the
/// circle.
double orientation_coverage(const std::vector<std::pair<double, double>>& arcs);

/// Positions with every tube and panel edge lengthened by two joint offsets
/// and the ground nodes kept on z = 0: the joint-centre geometry matching a
/// tube-frame state.
Eigen::VectorXd joint_frame_positions(const RobotModel& robot, const Eigen::VectorXd& x);

struct HeightReport {
  double sim = 0.0;     // top centroid, tube frame
  double scaled = 0.0;  // sim * effective_side / tube_side
  double joint = 0.0;   // top centroid of joint_frame_positions
};

HeightReport report_height(const RobotModel& robot, const TrussState& state);

// ---------------------------------------------------------------- runner

struct TrajectoryFrame {
  int tick = 0;
  double time = 0.0;
  double dt = 0.0;  // duration of the step that produced this frame
  std::string phase;
  TrussState state;
  Eigen::VectorXd xdot;
  Eigen::VectorXd ddot;
  SolveDiagnostics solve;
  StepDiagnostics step;
  StabilityReport stability;
  double feasibility_margin = 0.0;
};

struct AbortReason {
  ErrorCode code = ErrorCode::Aborted;
  std::string message;
  std::string phase;
  int tick = 0;
};

struct Trajectory {
  std::vector<TrajectoryFrame> frames;
  std::optional<AbortReason> abort;

  bool completed() const { return !abort.has_value(); }
  const TrussState& final_state() const { return frames.back().state; }
};

struct RunOptions {
  double dt = 0.05;
  FeasibilityLimits limits;
  Tolerances tol;
  StabilityOptions stability;
  double roller_speed_cap = isotruss::roller_speed_cap();  // m/s
  bool land_on_limit = true;    // emit the partial step that reaches a limit
  int landing_bisections = 30;
};

/// Executes a script one integration step at a time. Each step generates the
/// phase constraints, solves for velocities and roller rates, integrates and
/// checks limits and stability; the first failure ends the run with a reason.
class ScriptRunner {
 public:
  ScriptRunner(MotionScript script, const RobotModel& robot, const TrussState& start,
               RunOptions options = {});

  const TrajectoryFrame& initial_frame() const { return initial_; }
  /// Next frame, or nothing once the script has finished or aborted.
  std::optional<TrajectoryFrame> step();
  bool done() const;
  const std::optional<AbortReason>& abort() const { return abort_; }
  const TrussState& state() const { return current_; }

 private:
  bool prepare();
  void fail(ErrorCode code, const std::string& message);

  MotionScript script_;
  const RobotModel& robot_;
  RunOptions options_;
  IncidenceMatrices inc_;
  TrussState current_;
  TrussState phase_start_;
  TrajectoryFrame initial_;
  std::vector<Phase> phases_;
  std::size_t segment_ = 0;
  std::size_t phase_ = 0;
  int step_ = 0;
  int steps_ = 0;
  double phase_dt_ = 0.0;
  int tick_ = 0;
  double time_ = 0.0;
  std::string phase_name_ = "start";
  bool finished_ = false;
  std::optional<AbortReason> abort_;
};

Trajectory run_script(const MotionScript& script, const RobotModel& robot,
                      const TrussState& start, const RunOptions& options = {});

struct MaxSearch {
  double value = 0.0;          // largest parameter that completes
  double failing = 0.0;        // smallest parameter found to abort
  std::optional<AbortReason> binding;
  TrussState state;            // final state at `value`
  int runs = 0;
};

/// Bisection on a script parameter in [lo, hi] with completion as predicate.
MaxSearch search_max(const std::function<MotionScript(double)>& make, double lo, double hi,
                     double tolerance, const RobotModel& robot, const TrussState& start,
                     const RunOptions& options = {});

}  // namespace isotruss
