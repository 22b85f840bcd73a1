#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "isotruss/configurations.hpp"
#include "isotruss/kinematics.hpp"
#include "isotruss/motion.hpp"
#include "isotruss/roller.hpp"

namespace isotruss {

inline constexpr int kConfigFormatVersion = 1;
inline constexpr int kScriptFormatVersion = 1;

struct PowerConfig {
  double capacity_ah = 1.3;
  double radio_current = 0.0113;  // A
  MotorCurrentModel motor;
  std::string motor_provenance = "placeholder quadratic through the 76 kPa, 2.94 A anchor";
};

/// Everything a session or CLI run needs besides the script.
struct SimulationConfig {
  std::string configuration = "solar";
  RobotSpec spec;
  Tolerances tol;
  FeasibilityLimits limits;
  StabilityOptions stability;
  PowerConfig power;
  RollerUnitModel roller;
  double telemetry_hz = 20.0;

  RunOptions run_options() const;
  RobotModel build() const;
};

/// YAML text with mandatory `format_version`; absent keys keep defaults.
SimulationConfig parse_config(const std::string& text);
SimulationConfig load_config(const std::string& path);

/// "single", "solar" or "locomotion" select a default config; anything else
/// is read as a config file path.
SimulationConfig resolve_config(const std::string& name_or_path);

/// Limits file: `format_version` plus any of min_length, half_margin,
/// sweep_limit_deg.
FeasibilityLimits parse_limits(const std::string& text, FeasibilityLimits base = {});
FeasibilityLimits load_limits(const std::string& path, FeasibilityLimits base = {});

std::string serialize_config(const SimulationConfig& config);

/// Script file: `format_version`, optional `name`, and `steps`, a list of
/// single-key maps naming a generator (squat_extend, twist, tilt, sweep,
/// locomotion_cycle) with its parameters. JSON input is accepted as well.
MotionScript parse_script(const std::string& text, const FeasibilityLimits& limits = {});
MotionScript load_script(const std::string& path, const FeasibilityLimits& limits = {});

// ---------------------------------------------------------------- trajectories

/// Header row for a robot: tick,time,x0,y0,z0,...,d0,...,drift0,...,margin.
std::string trajectory_header(const RobotModel& robot);
std::string trajectory_row(const TrajectoryFrame& frame);
void write_trajectory(std::ostream& out, const RobotModel& robot, const Trajectory& traj);
void write_trajectory(const std::string& path, const RobotModel& robot, const Trajectory& traj);

struct TrajectoryRow {
  int tick = 0;
  double time = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd d;
  Eigen::VectorXd drift;
  double margin = 0.0;
};

std::vector<TrajectoryRow> read_trajectory(std::istream& in, const RobotModel& robot);
std::vector<TrajectoryRow> read_trajectory(const std::string& path, const RobotModel& robot);

/// Locale-independent shortest form with at most 9 significant digits.
std::string format_number(double value);

// ---------------------------------------------------------------- metrics

struct MetricsReport {
  GeometryMetrics geometry;
  double motor_current = 0.0;  // A at the structural pressure
  double endurance_min = 0.0;
  RollerMasses masses;
  double total_mass = 0.0;     // kg, lumped roller masses plus panel
  int triangles = 0;
};

MetricsReport compute_metrics(const SimulationConfig& config);
std::string format_metrics(const MetricsReport& report);

}  // namespace isotruss
