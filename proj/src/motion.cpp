#include "isotruss/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace isotruss {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRamp = 0.1;
constexpr double kDeg = kPi / 180.0;

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double segment_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Eigen::Vector2d& p) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

Eigen::Vector2d xy(const Eigen::Vector3d& p) { return p.head<2>(); }

Eigen::Vector3d rotate_z(const Eigen::Vector3d& p, const Eigen::Vector3d& c, double angle) {
  const double cs = std::cos(angle), sn = std::sin(angle);
  const Eigen::Vector3d r = p - c;
  return c + Eigen::Vector3d(cs * r.x() - sn * r.y(), sn * r.x() + cs * r.y(), r.z());
}

Eigen::Vector3d rotate_axis(const Eigen::Vector3d& p, const Eigen::Vector3d& c,
                            const Eigen::Vector3d& axis, double angle) {
  return c + Eigen::AngleAxisd(angle, axis.normalized()) * (p - c);
}

Eigen::Vector3d track(const Eigen::Vector3d& ref, const Eigen::Vector3d& p, double dt) {
  return (ref - p) / dt;
}

// Rigid velocity field carrying the current positions of `nodes` onto `refs`
// over dt (best-fit rotation and translation). Being an infinitesimal
// isometry, it leaves locked panel lengths stationary.
std::vector<Eigen::Vector3d> rigid_track(const std::vector<int>& nodes,
                                         const std::vector<Eigen::Vector3d>& refs,
                                         const TrussState& state, double dt) {
  Eigen::Vector3d cp = Eigen::Vector3d::Zero(), cq = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    cp += state.node(nodes[i]);
    cq += refs[i];
  }
  cp /= static_cast<double>(nodes.size());
  cq /= static_cast<double>(nodes.size());
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    H += (state.node(nodes[i]) - cp) * (refs[i] - cq).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  const Eigen::Matrix3d rot = svd.matrixV() * D * svd.matrixU().transpose();
  const Eigen::AngleAxisd aa(rot);
  const Eigen::Vector3d omega = aa.axis() * aa.angle() / dt;
  const Eigen::Vector3d vc = (cq - cp) / dt;
  std::vector<Eigen::Vector3d> v;
  for (int n : nodes) v.push_back(vc + omega.cross(state.node(n) - cp));
  return v;
}

void require_nodes(const std::vector<int>& nodes, const char* role, const RobotModel& robot) {
  if (nodes.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("configuration ") + robot.name + " has no " + role + " nodes");
  }
}

void require_node(int node, const char* role, const RobotModel& robot) {
  if (node < 0 || node >= robot.topology.node_count()) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("configuration ") + robot.name + " has no " + role + " node");
  }
}

std::vector<double> mass_weights(const RobotModel& robot) {
  return {robot.node_masses.data(), robot.node_masses.data() + robot.node_masses.size()};
}

std::vector<int> all_nodes(const RobotModel& robot) {
  std::vector<int> n(static_cast<std::size_t>(robot.topology.node_count()));
  for (std::size_t i = 0; i < n.size(); ++i) n[i] = static_cast<int>(i);
  return n;
}

Eigen::Vector3d weighted_com(const TrussState& s, const Eigen::VectorXd& m) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (Eigen::Index i = 0; i < m.size(); ++i) c += m(i) * s.x.segment<3>(3 * i);
  return c / m.sum();
}

// Peak speed `speed` over a trapezoid covering `travel`.
double trapezoid_duration(double travel, double speed) {
  return std::abs(travel) / (speed * (1.0 - kRamp));
}

void hold_fixed(MotionConstraintSet& c, const std::vector<int>& nodes) {
  c.fixed_nodes.insert(c.fixed_nodes.end(), nodes.begin(), nodes.end());
}

}  // namespace

// ---------------------------------------------------------------- stability

std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) { return (a - b).norm() < 1e-12; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Eigen::Vector2d> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 1e-14) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 1e-14) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

double signed_hull_distance(const std::vector<Eigen::Vector2d>& hull, const Eigen::Vector2d& p) {
  if (hull.empty()) return -std::numeric_limits<double>::infinity();
  if (hull.size() == 1) return -(hull[0] - p).norm();
  double nearest = std::numeric_limits<double>::infinity();
  bool inside = hull.size() >= 3;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    nearest = std::min(nearest, segment_distance(a, b, p));
    if (hull.size() >= 3 && cross2(b - a, p - a) <= 0.0) inside = false;
  }
  return inside ? nearest : -nearest;
}

StabilityReport stability(const TrussState& state, const Eigen::VectorXd& masses,
                          const StabilityOptions& options) {
  const Eigen::Index n = state.x.size() / 3;
  if (masses.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "mass vector must have one entry per node");
  }
  if (!(masses.sum() > 0.0) || (masses.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "masses must be non-negative with positive total");
  }
  StabilityReport r;
  r.com = weighted_com(state, masses);
  std::vector<Eigen::Vector2d> pts;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (state.x(3 * i + 2) < options.contact_tol) {
      r.contacts.push_back(static_cast<int>(i));
      pts.push_back(state.x.segment<2>(3 * i));
    }
  }
  r.hull = convex_hull(pts);
  r.margin = signed_hull_distance(r.hull, xy(r.com)) + options.patch_radius;
  return r;
}

// ---------------------------------------------------------------- scripts

double trapezoid_progress(double tau, double ramp) {
  tau = std::clamp(tau, 0.0, 1.0);
  if (ramp <= 0.0) return tau;
  const double v = 1.0 / (1.0 - ramp);
  if (tau < ramp) return v * tau * tau / (2.0 * ramp);
  if (tau > 1.0 - ramp) return 1.0 - v * (1.0 - tau) * (1.0 - tau) / (2.0 * ramp);
  return v * (tau - ramp / 2.0);
}

double PhaseContext::progress_next() const {
  return trapezoid_progress(std::min(t + dt, duration) / duration, kRamp);
}

MotionScript& MotionScript::then(const MotionScript& other) {
  segments.insert(segments.end(), other.segments.begin(), other.segments.end());
  return *this;
}

MotionScript script_squat_extend(SquatDirection direction, std::optional<double> target_height,
                                 const SquatOptions& options) {
  if (!(options.speed > 0.0)) throw Error(ErrorCode::InvalidArgument, "speed must be positive");
  const double sign = direction == SquatDirection::Up ? 1.0 : -1.0;
  MotionScript s;
  s.name = direction == SquatDirection::Up ? "extend" : "squat";
  s.segments.push_back({s.name, [=](const RobotModel& robot, const TrussState& state) {
    require_nodes(robot.roles.top, "top", robot);
    require_nodes(robot.roles.ground, "ground", robot);
    const double h0 = centroid(state, robot.roles.top).z();
    double travel = options.max_travel;
    if (target_height) {
      travel = sign * (*target_height - h0);
      if (travel <= 0.0) return std::vector<Phase>{};
    }
    Phase p;
    p.name = s.name;
    p.duration = trapezoid_duration(travel, options.speed);
    const auto top = robot.roles.top;
    const auto ground = robot.roles.ground;
    const BaseMode base = options.base;
    p.generate = [=](const PhaseContext& ctx) {
      MotionConstraintSet c;
      const double dz = sign * travel * ctx.progress_next();
      for (int n : top) {
        const Eigen::Vector3d ref = ctx.phase_start.node(n) + Eigen::Vector3d(0, 0, dz);
        c.moves.push_back({n, track(ref, ctx.state.node(n), ctx.dt), Axes::all()});
      }
      if (base == BaseMode::Fixed) {
        hold_fixed(c, ground);
      } else {
        for (int n : ground) c.pinned.push_back({n, Axes::vertical()});
      }
      return c;
    };
    return std::vector<Phase>{p};
  }});
  return s;
}

MotionScript script_twist(TwistPlane plane, double angle_deg, Rotation direction,
                          const TwistOptions& options) {
  if (!(options.node_speed > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "node speed must be positive");
  }
  const double angle = (direction == Rotation::Ccw ? 1.0 : -1.0) * angle_deg * kDeg;
  MotionScript s;
  s.name = plane == TwistPlane::Middle ? "twist-middle" : "twist-top";
  s.segments.push_back({s.name, [=](const RobotModel& robot, const TrussState& state) {
    require_nodes(robot.roles.middle, "middle", robot);
    require_nodes(robot.roles.top, "top", robot);
    if (angle == 0.0) return std::vector<Phase>{};
    const auto turning = plane == TwistPlane::Middle ? robot.roles.middle : robot.roles.top;
    const auto held = plane == TwistPlane::Middle ? robot.roles.top : robot.roles.middle;
    const auto pivot_nodes = plane == TwistPlane::Middle ? robot.roles.ground : robot.roles.top;
    const auto ground = robot.roles.ground;
    const Eigen::Vector3d pivot = centroid(state, pivot_nodes);
    double radius = 0.0;
    for (int n : turning) radius = std::max(radius, xy(state.node(n) - pivot).norm());
    Phase p;
    p.name = s.name;
    p.duration = trapezoid_duration(angle * radius, options.node_speed);
    p.generate = [=](const PhaseContext& ctx) {
      MotionConstraintSet c;
      const double a = angle * ctx.progress_next();
      for (int n : turning) {
        const Eigen::Vector3d ref = rotate_z(ctx.phase_start.node(n), pivot, a);
        c.moves.push_back({n, track(ref, ctx.state.node(n), ctx.dt), Axes::horizontal()});
      }
      std::vector<Eigen::Vector3d> refs;
      for (int n : held) {
        Eigen::Vector3d r = ctx.phase_start.node(n);
        r.z() = ctx.state.node(n).z();
        refs.push_back(r);
      }
      const auto v = rigid_track(held, refs, ctx.state, ctx.dt);
      for (std::size_t i = 0; i < held.size(); ++i) {
        c.moves.push_back({held[i], v[i], Axes::horizontal()});
      }
      hold_fixed(c, ground);
      return c;
    };
    return std::vector<Phase>{p};
  }});
  return s;
}

std::string TiltAxis::describe() const {
  if (kind == Kind::Joint) return "joint " + std::to_string(a);
  return "edge " + std::to_string(a) + "-" + std::to_string(b);
}

MotionScript script_tilt(TiltAxis axis, double angle_deg, const TiltOptions& options) {
  if (!(options.node_speed > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "node speed must be positive");
  }
  MotionScript s;
  s.name = "tilt-" + axis.describe();
  s.segments.push_back({s.name, [=](const RobotModel& robot, const TrussState& state) {
    require_nodes(robot.roles.top, "top", robot);
    require_nodes(robot.roles.ground, "ground", robot);
    const auto& top = robot.roles.top;
    const int m = static_cast<int>(top.size());
    if (axis.a < 0 || axis.a >= m || axis.b < 0 || axis.b >= m ||
        (axis.kind == TiltAxis::Kind::Edge && axis.a == axis.b)) {
      throw Error(ErrorCode::InvalidArgument, "tilt axis " + axis.describe() + " is not valid");
    }
    if (angle_deg == 0.0) return std::vector<Phase>{};
    const Eigen::Vector3d c0 = centroid(state, top);
    Eigen::Vector3d side = state.node(top[static_cast<std::size_t>(axis.a)]);
    if (axis.kind == TiltAxis::Kind::Edge) {
      side = 0.5 * (side + state.node(top[static_cast<std::size_t>(axis.b)]));
    }
    Eigen::Vector3d v = side - c0;
    v.z() = 0.0;
    if (v.norm() < 1e-9) throw Error(ErrorCode::InvalidArgument, "tilt axis is degenerate");
    // rotating about ez x v lowers the axis side and leans the normal toward it
    const Eigen::Vector3d u = Eigen::Vector3d::UnitZ().cross(v.normalized());
    double radius = 0.0;
    for (int n : top) radius = std::max(radius, (state.node(n) - c0).norm());
    const double angle = angle_deg * kDeg;
    const auto ground = robot.roles.ground;
    const auto middle = robot.roles.middle;
    const bool recenter = options.recenter && !middle.empty();

    Phase p;
    p.name = s.name;
    p.duration = trapezoid_duration(angle * radius, options.node_speed);
    p.generate = [=](const PhaseContext& ctx) {
      MotionConstraintSet c;
      const double a = angle * ctx.progress_next();
      std::vector<Eigen::Vector3d> refs;
      for (int n : top) refs.push_back(rotate_axis(ctx.phase_start.node(n), c0, u, a));
      const auto v = rigid_track(top, refs, ctx.state, ctx.dt);
      for (std::size_t i = 0; i < top.size(); ++i) c.moves.push_back({top[i], v[i], Axes::all()});
      if (recenter) {
        const Eigen::Vector3d ref = centroid(ctx.phase_start, middle);
        c.centroid_moves.push_back(
            {middle, {}, track(ref, centroid(ctx.state, middle), ctx.dt), Axes::horizontal()});
      }
      hold_fixed(c, ground);
      return c;
    };
    return std::vector<Phase>{p};
  }});
  return s;
}

MotionScript script_sweep(double angle_deg, const SweepOptions& options) {
  if (std::abs(angle_deg) > options.limit_deg) {
    throw Error(ErrorCode::LimitViolation,
                "sweep of " + std::to_string(angle_deg) + " deg exceeds the +/-" +
                    std::to_string(options.limit_deg) +
                    " deg limit (tube bending failure beyond this angle)");
  }
  if (!(options.node_speed > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "node speed must be positive");
  }
  MotionScript s;
  s.name = "sweep";
  s.segments.push_back({s.name, [=](const RobotModel& robot, const TrussState& state) {
    require_nodes(robot.roles.top, "top", robot);
    require_nodes(robot.roles.ground, "ground", robot);
    if (angle_deg == 0.0) return std::vector<Phase>{};
    const auto top = robot.roles.top;
    const auto ground = robot.roles.ground;
    const Eigen::Vector3d pivot = centroid(state, top);
    double radius = 0.0;
    for (int n : top) radius = std::max(radius, xy(state.node(n) - pivot).norm());
    const double angle = angle_deg * kDeg;
    Phase p;
    p.name = s.name;
    p.duration = trapezoid_duration(angle * radius, options.node_speed);
    p.generate = [=](const PhaseContext& ctx) {
      MotionConstraintSet c;
      const double a = angle * ctx.progress_next();
      std::vector<Eigen::Vector3d> refs;
      for (int n : top) refs.push_back(rotate_z(ctx.phase_start.node(n), pivot, a));
      const auto v = rigid_track(top, refs, ctx.state, ctx.dt);
      for (std::size_t i = 0; i < top.size(); ++i) c.moves.push_back({top[i], v[i], Axes::all()});
      hold_fixed(c, ground);
      return c;
    };
    return std::vector<Phase>{p};
  }});
  return s;
}

namespace {

// Point of segment ab nearest to p, kept within [f, 1-f] of its length.
Eigen::Vector2d support_target(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                               const Eigen::Vector2d& p, double f) {
  const Eigen::Vector2d ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), f, 1.0 - f);
  return a + t * ab;
}

Phase com_shift(const RobotModel& robot, const TrussState& state, const std::string& name,
                int foot, int rear, std::vector<int> contacts, const GaitOptions& o) {
  const auto w = mass_weights(robot);
  const auto nodes = all_nodes(robot);
  const Eigen::Vector3d com0 = weighted_com(state, robot.node_masses);
  const Eigen::Vector2d target =
      support_target(xy(state.node(foot)), xy(state.node(rear)), xy(com0),
                     std::clamp(o.segment_clamp, 0.0, 0.5));
  const Eigen::Vector2d shift = target - xy(com0);
  Phase p;
  p.name = name;
  p.duration = std::max(1.0, trapezoid_duration(shift.norm(), o.com_speed));
  const Eigen::VectorXd masses = robot.node_masses;
  p.generate = [=](const PhaseContext& ctx) {
    MotionConstraintSet c;
    Eigen::Vector3d ref = com0;
    ref.head<2>() += shift * ctx.progress_next();
    c.centroid_moves.push_back(
        {nodes, w, track(ref, weighted_com(ctx.state, masses), ctx.dt), Axes::horizontal()});
    hold_fixed(c, contacts);
    return c;
  };
  p.abort.stability = true;
  return p;
}

// Moves `foot` by `delta` while the other two contacts stay fixed and the
// centre of mass is held over the remaining support.
Phase foot_move(const RobotModel& robot, const std::string& name, int foot,
                std::vector<int> contacts, const Eigen::Vector3d& delta, const GaitOptions& o) {
  const auto w = mass_weights(robot);
  const auto nodes = all_nodes(robot);
  const Eigen::VectorXd masses = robot.node_masses;
  Phase p;
  p.name = name;
  p.duration = std::max(1.0, trapezoid_duration(delta.norm(), o.foot_speed));
  p.generate = [=](const PhaseContext& ctx) {
    MotionConstraintSet c;
    const Eigen::Vector3d ref = ctx.phase_start.node(foot) + delta * ctx.progress_next();
    c.moves.push_back({foot, track(ref, ctx.state.node(foot), ctx.dt), Axes::all()});
    const Eigen::Vector3d com_ref = weighted_com(ctx.phase_start, masses);
    c.centroid_moves.push_back(
        {nodes, w, track(com_ref, weighted_com(ctx.state, masses), ctx.dt), Axes::horizontal()});
    hold_fixed(c, contacts);
    return c;
  };
  p.abort.stability = true;
  return p;
}

}  // namespace

MotionScript script_locomotion_cycle(double step_length, const GaitOptions& o) {
  if (!(step_length > 0.0)) throw Error(ErrorCode::InvalidArgument, "step length must be positive");
  if (!(o.lift_height > 0.0) || !(o.foot_speed > 0.0) || !(o.com_speed > 0.0) ||
      !(o.reset_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "gait speeds and lift height must be positive");
  }
  const double slide = o.slide_length.value_or(step_length);
  if (!(slide >= 0.0)) throw Error(ErrorCode::InvalidArgument, "slide length must be >= 0");
  const Eigen::Vector3d lift(0, 0, o.lift_height);
  const Eigen::Vector3d advance(step_length, 0, 0);

  auto step_foot = [=](const std::string& side, bool right) {
    ScriptSegment seg;
    seg.name = side + "-step";
    seg.plan = [=](const RobotModel& robot, const TrussState& state) {
      require_node(robot.roles.left_foot, "left foot", robot);
      require_node(robot.roles.right_foot, "right foot", robot);
      require_node(robot.roles.rear_center, "rear centre", robot);
      const int foot = right ? robot.roles.right_foot : robot.roles.left_foot;
      const int other = right ? robot.roles.left_foot : robot.roles.right_foot;
      const int rear = robot.roles.rear_center;
      std::vector<Phase> phases;
      phases.push_back(com_shift(robot, state, side + "-shift-com", other, rear,
                                 {foot, other, rear}, o));
      phases.push_back(foot_move(robot, side + "-lift", foot, {other, rear}, lift, o));
      phases.push_back(foot_move(robot, side + "-advance", foot, {other, rear}, advance, o));
      phases.push_back(foot_move(robot, side + "-place", foot, {other, rear}, -lift, o));
      return phases;
    };
    return seg;
  };

  ScriptSegment rear_slide{"rear-slide", [=](const RobotModel& robot, const TrussState&) {
    const int rear = robot.roles.rear_center;
    const std::vector<int> feet{robot.roles.left_foot, robot.roles.right_foot};
    const std::vector<int> contacts{rear, feet[0], feet[1]};
    const auto w = mass_weights(robot);
    const auto nodes = all_nodes(robot);
    const Eigen::VectorXd masses = robot.node_masses;
    std::vector<Phase> phases;
    if (slide == 0.0) return phases;
    Phase p;
    p.name = "rear-slide";
    p.duration = std::max(1.0, trapezoid_duration(slide, o.foot_speed));
    p.generate = [=](const PhaseContext& ctx) {
      MotionConstraintSet c;
      const double s = ctx.progress_next();
      const Eigen::Vector3d ref = ctx.phase_start.node(rear) + Eigen::Vector3d(slide * s, 0, 0);
      c.moves.push_back({rear, track(ref, ctx.state.node(rear), ctx.dt), Axes::all()});
      // COM moves to the centroid of the final support triangle
      const Eigen::Vector3d com0 = weighted_com(ctx.phase_start, masses);
      Eigen::Vector3d goal = (ctx.phase_start.node(feet[0]) + ctx.phase_start.node(feet[1]) +
                              ctx.phase_start.node(rear)) / 3.0;
      goal.x() += slide / 3.0;
      const Eigen::Vector3d com_ref = com0 + s * (goal - com0);
      c.centroid_moves.push_back(
          {nodes, w, track(com_ref, weighted_com(ctx.state, masses), ctx.dt), Axes::horizontal()});
      hold_fixed(c, feet);
      return c;
    };
    p.abort.stability = true;
    phases.push_back(p);
    return phases;
  }};

  ScriptSegment reset{"reset", [=](const RobotModel& robot, const TrussState& state) {
    const int rear = robot.roles.rear_center;
    const int lf = robot.roles.left_foot;
    const int rf = robot.roles.right_foot;
    const Eigen::VectorXd L0 = edge_lengths(robot.initial.x, robot.topology);
    const Eigen::VectorXd L1 = edge_lengths(state.x, robot.topology);
    const double travel = (L0 - L1).cwiseAbs().maxCoeff();
    std::vector<Phase> phases;
    if (travel < 1e-12) return phases;
    const auto topo = robot.topology;
    Phase p;
    p.name = "reset";
    p.duration = std::max(1.0, trapezoid_duration(travel, o.reset_rate));
    p.generate = [=](const PhaseContext& ctx) {
      MotionConstraintSet c;
      const Eigen::VectorXd L = edge_lengths(ctx.state.x, topo);
      const Eigen::VectorXd ref = L1 + (L0 - L1) * ctx.progress_next();
      for (Eigen::Index k = 0; k < L.size(); ++k) {
        c.edge_rates.emplace_back(static_cast<int>(k), (ref(k) - L(k)) / ctx.dt);
      }
      // the rear node anchors; the feet slide on the ground without turning
      c.fixed_nodes.push_back(rear);
      c.pinned.push_back({lf, Axes::vertical()});
      c.pinned.push_back({rf, Axes::vertical()});
      c.centroid_moves.push_back({{lf, rf}, {}, Eigen::Vector3d::Zero(), {false, true, false}});
      return c;
    };
    p.abort.stability = true;
    phases.push_back(p);
    return phases;
  }};

  MotionScript s;
  s.name = "locomotion-cycle";
  s.segments = {step_foot("right", true), step_foot("left", false), rear_slide, reset};
  return s;
}

MotionConstraintSet jog_constraints(int node, const Eigen::Vector3d& velocity,
                                    const std::vector<int>& fixed_nodes) {
  MotionConstraintSet c;
  c.moves.push_back({node, velocity, Axes::all()});
  c.fixed_nodes = fixed_nodes;
  return c;
}

// ---------------------------------------------------------------- measures

Eigen::Vector3d centroid(const TrussState& state, const std::vector<int>& nodes) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (int n : nodes) c += state.node(n);
  return nodes.empty() ? c : Eigen::Vector3d(c / static_cast<double>(nodes.size()));
}

double top_height(const RobotModel& robot, const TrussState& state) {
  return centroid(state, robot.roles.top).z();
}

double azimuth_change(const TrussState& from, const TrussState& to,
                      const std::vector<int>& nodes, const std::vector<int>& pivot) {
  const Eigen::Vector2d c0 = xy(centroid(from, pivot));
  const Eigen::Vector2d c1 = xy(centroid(to, pivot));
  double sum = 0.0;
  for (int n : nodes) {
    const Eigen::Vector2d a = xy(from.node(n)) - c0;
    const Eigen::Vector2d b = xy(to.node(n)) - c1;
    sum += std::atan2(cross2(a, b), a.dot(b));
  }
  return nodes.empty() ? 0.0 : sum / static_cast<double>(nodes.size()) / kDeg;
}

Eigen::Vector3d top_normal(const RobotModel& robot, const TrussState& state) {
  const auto& t = robot.roles.top;
  if (t.size() < 3) throw Error(ErrorCode::InvalidArgument, "top plane needs three nodes");
  Eigen::Vector3d n =
      (state.node(t[1]) - state.node(t[0])).cross(state.node(t[2]) - state.node(t[0]));
  if (n.z() < 0.0) n = -n;
  return n.normalized();
}

double tilt_angle_deg(const RobotModel& robot, const TrussState& state) {
  return std::acos(std::clamp(top_normal(robot, state).z(), -1.0, 1.0)) / kDeg;
}

double normal_azimuth_deg(const RobotModel& robot, const TrussState& state) {
  const Eigen::Vector3d n = top_normal(robot, state);
  return std::atan2(n.y(), n.x()) / kDeg;
}

double orientation_coverage(const std::vector<std::pair<double, double>>& arcs) {
  std::vector<std::pair<double, double>> spans;
  for (const auto& [centre, half] : arcs) {
    if (half <= 0.0) continue;
    if (half >= 180.0) return 360.0;
    double lo = std::fmod(centre - half, 360.0);
    if (lo < 0.0) lo += 360.0;
    const double hi = lo + 2.0 * half;
    if (hi > 360.0) {
      spans.emplace_back(lo, 360.0);
      spans.emplace_back(0.0, hi - 360.0);
    } else {
      spans.emplace_back(lo, hi);
    }
  }
  std::sort(spans.begin(), spans.end());
  double total = 0.0, lo = 0.0, hi = -1.0;
  for (const auto& [a, b] : spans) {
    if (a > hi) {
      if (hi > lo) total += hi - lo;
      lo = a;
      hi = b;
    } else {
      hi = std::max(hi, b);
    }
  }
  if (hi > lo) total += hi - lo;
  return total;
}

Eigen::VectorXd joint_frame_positions(const RobotModel& robot, const Eigen::VectorXd& x) {
  const auto& topo = robot.topology;
  const double offset = robot.spec.joint_offset;
  const int ne = topo.edge_count();
  const auto& ve = topo.virtual_edges();
  const int rows = ne + static_cast<int>(ve.size());
  const auto& ground = robot.roles.ground;

  Eigen::VectorXd target(rows);
  target.head(ne) = edge_lengths(x, topo).array() + 2.0 * offset;
  for (std::size_t k = 0; k < ve.size(); ++k) {
    target(ne + static_cast<Eigen::Index>(k)) = ve[k].length + 2.0 * offset;
  }
  Eigen::VectorXd y = x * robot.spec.effective_scale();
  const Eigen::Index g = static_cast<Eigen::Index>(ground.size());
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd r(rows + g);
    r.head(ne) = edge_lengths(y, topo);
    r.segment(ne, rows - ne) = virtual_edge_lengths(y, topo);
    r.head(rows) -= target;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(rows + g, topo.dof());
    J.topRows(rows) = rigidity_matrix(y, topo);
    for (Eigen::Index k = 0; k < g; ++k) {
      const int n = ground[static_cast<std::size_t>(k)];
      J(rows + k, 3 * n + 2) = 1.0;
      r(rows + k) = y(3 * n + 2);
    }
    if (r.cwiseAbs().maxCoeff() < 1e-12) break;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(J);
    y -= cod.solve(r);
  }
  return y;
}

HeightReport report_height(const RobotModel& robot, const TrussState& state) {
  HeightReport h;
  h.sim = top_height(robot, state);
  h.scaled = h.sim * robot.spec.effective_scale();
  TrussState joint = state;
  joint.x = joint_frame_positions(robot, state.x);
  h.joint = top_height(robot, joint);
  return h;
}

// ---------------------------------------------------------------- runner

namespace {

TrajectoryFrame make_frame(int tick, double time, double dt, const std::string& phase,
                           const TrussState& state, const RobotModel& robot,
                           const RunOptions& o) {
  TrajectoryFrame f;
  f.tick = tick;
  f.time = time;
  f.dt = dt;
  f.phase = phase;
  f.state = state;
  f.xdot = Eigen::VectorXd::Zero(state.x.size());
  f.ddot = Eigen::VectorXd::Zero(state.d.size());
  f.stability = stability(state, robot.node_masses, o.stability);
  f.feasibility_margin = check_feasibility(state, robot.topology, o.limits).min_margin;
  const Eigen::Index T = state.perimeter.size();
  f.step.drift_before = Eigen::VectorXd::Zero(T);
  f.step.drift_after = Eigen::VectorXd::Zero(T);
  const Eigen::VectorXd L = edge_lengths(state.x, robot.topology);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double d = std::abs(L.segment<3>(3 * t).sum() - state.perimeter(t)) / state.perimeter(t);
    f.step.drift_before(t) = d;
    f.step.drift_after(t) = d;
  }
  return f;
}

}  // namespace

ScriptRunner::ScriptRunner(MotionScript script, const RobotModel& robot, const TrussState& start,
                           RunOptions options)
    : script_(std::move(script)), robot_(robot), options_(std::move(options)),
      inc_(incidence(robot.topology)), current_(start) {
  if (!(options_.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
  initial_ = make_frame(0, 0.0, 0.0, "start", start, robot_, options_);
}

bool ScriptRunner::done() const { return finished_; }

void ScriptRunner::fail(ErrorCode code, const std::string& message) {
  abort_ = AbortReason{code, message, phase_name_, tick_};
  finished_ = true;
}

// Moves to the next pending step, planning segments and entering phases as
// needed; false when the script is exhausted.
bool ScriptRunner::prepare() {
  while (true) {
    if (phase_ < phases_.size()) {
      const Phase& p = phases_[phase_];
      if (steps_ == 0) {
        phase_name_ = p.name;
        if (!(p.duration > 0.0)) {
          throw Error(ErrorCode::InvalidArgument, "phase " + p.name + " has no duration");
        }
        steps_ = std::max(1, static_cast<int>(std::ceil(p.duration / options_.dt - 1e-9)));
        phase_dt_ = p.duration / steps_;
        phase_start_ = current_;
      }
      if (step_ < steps_) return true;
      ++phase_;
      step_ = 0;
      steps_ = 0;
      continue;
    }
    if (segment_ >= script_.segments.size()) return false;
    const ScriptSegment& seg = script_.segments[segment_++];
    phase_name_ = seg.name;
    phases_ = seg.plan(robot_, current_);
    phase_ = 0;
    step_ = 0;
    steps_ = 0;
  }
}

std::optional<TrajectoryFrame> ScriptRunner::step() {
  if (finished_) return std::nullopt;
  const auto& topo = robot_.topology;
  const RunOptions& o = options_;
  try {
    if (!prepare()) {
      finished_ = true;
      return std::nullopt;
    }
    const Phase& phase = phases_[phase_];
    const double dt = phase_dt_;
    const PhaseContext ctx{robot_, current_, phase_start_, step_ * dt, dt, phase.duration};
    const MotionConstraintSet c = phase.generate(ctx);
    const VelocitySolution sol = solve_velocities(current_, topo, c, o.tol);
    if (sol.diagnostics.rank_deficient && phase.abort.rank_deficiency) {
      fail(ErrorCode::RankDeficient, "constraint system is rank deficient (singular configuration)");
      return std::nullopt;
    }
    const Eigen::VectorXd ddot = roller_rates(sol.xdot, current_, topo, inc_, o.tol);
    const double peak = ddot.lpNorm<Eigen::Infinity>();
    if (phase.abort.speed_cap && peak > o.roller_speed_cap) {
      Eigen::Index r = 0;
      ddot.cwiseAbs().maxCoeff(&r);
      fail(ErrorCode::SpeedCap, "roller " + std::to_string(r) + " would need " +
                                    std::to_string(peak) + " m/s, above the " +
                                    std::to_string(o.roller_speed_cap) +
                                    " m/s cap (near-singular configuration)");
      return std::nullopt;
    }
    StepResult res = advance(current_, topo, sol.xdot, ddot, dt, c, o.tol);
    const FeasibilityReport feas = check_feasibility(res.state, topo, o.limits);
    double used = dt;
    bool landed = false;
    if (!feas.feasible && phase.abort.feasibility) {
      const std::string reason = feas.describe();
      std::optional<StepResult> best;
      double lo = 0.0, hi = 1.0;
      if (o.land_on_limit) {
        for (int b = 0; b < o.landing_bisections; ++b) {
          const double mid = 0.5 * (lo + hi);
          StepResult trial = advance(current_, topo, sol.xdot, ddot, mid * dt, c, o.tol);
          if (check_feasibility(trial.state, topo, o.limits).feasible) {
            lo = mid;
            best = std::move(trial);
          } else {
            hi = mid;
          }
        }
      }
      if (!best) {
        fail(ErrorCode::LimitViolation, reason);
        return std::nullopt;
      }
      fail(ErrorCode::LimitViolation,
           check_feasibility(best->state, topo, o.limits).describe() + ", reached");
      res = std::move(*best);
      used = lo * dt;
      landed = true;
    }
    const StabilityReport stab = stability(res.state, robot_.node_masses, o.stability);
    if (phase.abort.stability && !stab.stable()) {
      if (!landed) {
        fail(ErrorCode::Stability,
             "stability margin " + std::to_string(stab.margin) + " m is not positive");
      }
      return std::nullopt;
    }
    ++tick_;
    ++step_;
    time_ += used;
    TrajectoryFrame f;
    f.tick = tick_;
    f.time = time_;
    f.dt = used;
    f.phase = phase.name;
    f.state = std::move(res.state);
    f.xdot = sol.xdot;
    f.ddot = ddot;
    f.solve = sol.diagnostics;
    f.step = std::move(res.diagnostics);
    f.stability = stab;
    f.feasibility_margin = check_feasibility(f.state, topo, o.limits).min_margin;
    current_ = f.state;
    if (landed) abort_->tick = tick_;
    return f;
  } catch (const Error& e) {
    fail(e.code(), e.what());
    return std::nullopt;
  }
}

Trajectory run_script(const MotionScript& script, const RobotModel& robot,
                      const TrussState& start, const RunOptions& o) {
  ScriptRunner runner(script, robot, start, o);
  Trajectory traj;
  traj.frames.push_back(runner.initial_frame());
  while (auto f = runner.step()) traj.frames.push_back(std::move(*f));
  traj.abort = runner.abort();
  return traj;
}

MaxSearch search_max(const std::function<MotionScript(double)>& make, double lo, double hi,
                     double tolerance, const RobotModel& robot, const TrussState& start,
                     const RunOptions& options) {
  MaxSearch r;
  auto attempt = [&](double v) {
    ++r.runs;
    return run_script(make(v), robot, start, options);
  };
  Trajectory top = attempt(hi);
  if (top.completed()) {
    r.value = hi;
    r.failing = hi;
    r.state = top.final_state();
    return r;
  }
  r.binding = top.abort;
  r.failing = hi;
  Trajectory base = attempt(lo);
  if (!base.completed()) {
    r.value = lo;
    r.failing = lo;
    r.binding = base.abort;
    r.state = base.final_state();
    return r;
  }
  r.state = base.final_state();
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    Trajectory t = attempt(mid);
    if (t.completed()) {
      lo = mid;
      r.state = t.final_state();
    } else {
      hi = mid;
      r.binding = t.abort;
    }
  }
  r.value = lo;
  r.failing = hi;
  return r;
}

}  // namespace isotruss
