#include "isotruss/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "isotruss/error.hpp"

namespace isotruss {

namespace {

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, std::string("cannot open ") + what + " file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_version(const YAML::Node& root, int expected, const char* what) {
  if (!root.IsMap()) throw Error(ErrorCode::Parse, std::string(what) + ": expected a mapping");
  if (!root["format_version"]) {
    throw Error(ErrorCode::Parse, std::string(what) + ": missing format_version");
  }
  const int v = root["format_version"].as<int>();
  if (v != expected) {
    throw Error(ErrorCode::Version,
                std::string(what) + ": unsupported format_version " + std::to_string(v));
  }
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!node.IsMap()) throw Error(ErrorCode::Parse, where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw Error(ErrorCode::Parse, where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (node[key]) out = node[key].as<T>();
}

void read_limits(const YAML::Node& n, FeasibilityLimits& l, const std::string& where) {
  check_keys(n, {"format_version", "min_length", "half_margin", "sweep_limit_deg"}, where);
  read(n, "min_length", l.min_length);
  read(n, "half_margin", l.half_margin);
  read(n, "sweep_limit_deg", l.sweep_limit_deg);
  if (!(l.min_length > 0.0) || !(l.half_margin > 0.0) || !(l.sweep_limit_deg > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, where + ": limits must be positive");
  }
}

double positive(const YAML::Node& n, const char* key, double fallback, const std::string& where) {
  const double v = n[key] ? n[key].as<double>() : fallback;
  if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, where + ": " + key + " must be positive");
  return v;
}

MotionScript parse_step(const std::string& kind, const YAML::Node& p,
                        const FeasibilityLimits& limits) {
  const std::string where = "script step " + kind;
  const YAML::Node args = p.IsNull() ? YAML::Node(YAML::NodeType::Map) : p;
  if (kind == "squat_extend") {
    check_keys(args, {"direction", "target_height", "base", "speed", "max_travel"}, where);
    const auto dir = args["direction"] ? args["direction"].as<std::string>() : "up";
    if (dir != "up" && dir != "down") throw Error(ErrorCode::Parse, where + ": direction up|down");
    SquatOptions o;
    const auto base = args["base"] ? args["base"].as<std::string>() : "fixed";
    if (base != "fixed" && base != "sliding") throw Error(ErrorCode::Parse, where + ": base fixed|sliding");
    o.base = base == "fixed" ? BaseMode::Fixed : BaseMode::Sliding;
    o.speed = positive(args, "speed", o.speed, where);
    o.max_travel = positive(args, "max_travel", o.max_travel, where);
    std::optional<double> target;
    if (args["target_height"]) target = args["target_height"].as<double>();
    return script_squat_extend(dir == "up" ? SquatDirection::Up : SquatDirection::Down, target, o);
  }
  if (kind == "twist") {
    check_keys(args, {"plane", "angle_deg", "direction", "node_speed"}, where);
    const auto plane = args["plane"] ? args["plane"].as<std::string>() : "middle";
    const auto dir = args["direction"] ? args["direction"].as<std::string>() : "ccw";
    if (plane != "top" && plane != "middle") throw Error(ErrorCode::Parse, where + ": plane top|middle");
    if (dir != "ccw" && dir != "cw") throw Error(ErrorCode::Parse, where + ": direction ccw|cw");
    TwistOptions o;
    o.node_speed = positive(args, "node_speed", o.node_speed, where);
    return script_twist(plane == "top" ? TwistPlane::Top : TwistPlane::Middle,
                        args["angle_deg"].as<double>(),
                        dir == "ccw" ? Rotation::Ccw : Rotation::Cw, o);
  }
  if (kind == "tilt") {
    check_keys(args, {"axis", "index", "nodes", "angle_deg", "node_speed", "recenter"}, where);
    const auto axis = args["axis"] ? args["axis"].as<std::string>() : "joint";
    TiltAxis a;
    if (axis == "joint") {
      a = TiltAxis::joint(args["index"] ? args["index"].as<int>() : 0);
    } else if (axis == "edge") {
      const auto n = args["nodes"].as<std::vector<int>>();
      if (n.size() != 2) throw Error(ErrorCode::Parse, where + ": edge needs two indices");
      a = TiltAxis::edge(n[0], n[1]);
    } else {
      throw Error(ErrorCode::Parse, where + ": axis joint|edge");
    }
    TiltOptions o;
    o.node_speed = positive(args, "node_speed", o.node_speed, where);
    read(args, "recenter", o.recenter);
    return script_tilt(a, args["angle_deg"].as<double>(), o);
  }
  if (kind == "sweep") {
    check_keys(args, {"angle_deg", "node_speed"}, where);
    SweepOptions o;
    o.node_speed = positive(args, "node_speed", o.node_speed, where);
    o.limit_deg = limits.sweep_limit_deg;
    return script_sweep(args["angle_deg"].as<double>(), o);
  }
  if (kind == "locomotion_cycle") {
    check_keys(args, {"step_length", "lift_height", "slide_length", "foot_speed", "com_speed",
                      "reset_rate", "segment_clamp", "repeat"},
               where);
    GaitOptions o;
    o.lift_height = positive(args, "lift_height", o.lift_height, where);
    o.foot_speed = positive(args, "foot_speed", o.foot_speed, where);
    o.com_speed = positive(args, "com_speed", o.com_speed, where);
    o.reset_rate = positive(args, "reset_rate", o.reset_rate, where);
    read(args, "segment_clamp", o.segment_clamp);
    if (args["slide_length"]) o.slide_length = args["slide_length"].as<double>();
    const double step = positive(args, "step_length", 0.61, where);
    const int repeat = args["repeat"] ? args["repeat"].as<int>() : 1;
    if (repeat < 1) throw Error(ErrorCode::InvalidArgument, where + ": repeat must be >= 1");
    MotionScript s = script_locomotion_cycle(step, o);
    const MotionScript once = s;
    for (int i = 1; i < repeat; ++i) s.then(once);
    return s;
  }
  throw Error(ErrorCode::Parse, "unknown script generator '" + kind + "'");
}

}  // namespace

RunOptions SimulationConfig::run_options() const {
  RunOptions o;
  o.dt = tol.dt;
  o.tol = tol;
  o.limits = limits;
  o.stability = stability;
  o.roller_speed_cap = roller.speed_cap;
  return o;
}

RobotModel SimulationConfig::build() const { return build_configuration(configuration, spec); }

SimulationConfig parse_config(const std::string& text) {
  SimulationConfig c;
  try {
    const YAML::Node root = YAML::Load(text);
    check_version(root, kConfigFormatVersion, "config");
    check_keys(root, {"format_version", "configuration", "robot", "tolerances", "limits",
                      "stability", "power", "roller", "telemetry_hz"},
               "config");
    read(root, "configuration", c.configuration);
    if (const auto r = root["robot"]) {
      check_keys(r, {"tube_length", "tube_diameter", "joint_offset", "effective_side", "masses",
                     "panel_mass", "pressures", "stowed_volume", "stowed_footprint"},
                 "config robot");
      read(r, "tube_length", c.spec.tube_length);
      read(r, "tube_diameter", c.spec.tube_diameter);
      read(r, "joint_offset", c.spec.joint_offset);
      read(r, "effective_side", c.spec.effective_side);
      read(r, "panel_mass", c.spec.panel_mass);
      if (const auto m = r["masses"]) {
        check_keys(m, {"active", "passive", "triangle"}, "config robot.masses");
        read(m, "active", c.spec.masses.active);
        read(m, "passive", c.spec.masses.passive);
        read(m, "triangle", c.spec.masses.triangle);
      }
      if (const auto p = r["pressures"]) {
        check_keys(p, {"structural", "low_torque"}, "config robot.pressures");
        read(p, "structural", c.spec.structural_pressure);
        read(p, "low_torque", c.spec.low_torque_pressure);
      }
      if (r["stowed_volume"]) {
        for (const auto& kv : r["stowed_volume"]) {
          c.spec.stowed_volume[kv.first.as<std::string>()] = kv.second.as<double>();
        }
      }
      if (r["stowed_footprint"]) {
        for (const auto& kv : r["stowed_footprint"]) {
          c.spec.stowed_footprint[kv.first.as<std::string>()] = kv.second.as<double>();
        }
      }
    }
    if (const auto t = root["tolerances"]) {
      check_keys(t, {"degenerate", "feasibility", "consistency", "reconstruction", "dt"},
                 "config tolerances");
      c.tol.degenerate = positive(t, "degenerate", c.tol.degenerate, "config tolerances");
      c.tol.feasibility = positive(t, "feasibility", c.tol.feasibility, "config tolerances");
      c.tol.consistency = positive(t, "consistency", c.tol.consistency, "config tolerances");
      c.tol.reconstruction = positive(t, "reconstruction", c.tol.reconstruction, "config tolerances");
      c.tol.dt = positive(t, "dt", c.tol.dt, "config tolerances");
    }
    if (const auto l = root["limits"]) read_limits(l, c.limits, "config limits");
    if (const auto s = root["stability"]) {
      check_keys(s, {"contact_tol", "patch_radius"}, "config stability");
      c.stability.contact_tol = positive(s, "contact_tol", c.stability.contact_tol, "config stability");
      read(s, "patch_radius", c.stability.patch_radius);
      if (c.stability.patch_radius < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "config stability: patch_radius must be >= 0");
      }
    }
    if (const auto p = root["power"]) {
      check_keys(p, {"capacity_ah", "radio_current", "motor_current"}, "config power");
      c.power.capacity_ah = positive(p, "capacity_ah", c.power.capacity_ah, "config power");
      read(p, "radio_current", c.power.radio_current);
      if (const auto m = p["motor_current"]) {
        check_keys(m, {"coefficients", "provenance"}, "config power.motor_current");
        const auto co = m["coefficients"].as<std::vector<double>>();
        if (co.size() != 3) throw Error(ErrorCode::Parse, "config: motor_current needs 3 coefficients");
        c.power.motor.coefficients = {co[0], co[1], co[2]};
        c.power.motor_provenance = m["provenance"] ? m["provenance"].as<std::string>() : "user supplied";
      }
    }
    if (const auto r = root["roller"]) {
      check_keys(r, {"speed_cap", "encoder_resolution", "time_constant", "gains"}, "config roller");
      c.roller.speed_cap = positive(r, "speed_cap", c.roller.speed_cap, "config roller");
      c.roller.encoder_resolution =
          positive(r, "encoder_resolution", c.roller.encoder_resolution, "config roller");
      c.roller.time_constant = positive(r, "time_constant", c.roller.time_constant, "config roller");
      if (const auto g = r["gains"]) {
        check_keys(g, {"kp", "ki", "kd"}, "config roller.gains");
        read(g, "kp", c.roller.gains.kp);
        read(g, "ki", c.roller.gains.ki);
        read(g, "kd", c.roller.gains.kd);
      }
    }
    c.telemetry_hz = positive(root, "telemetry_hz", c.telemetry_hz, "config");
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  c.spec.validate();
  c.roller.capacity_ah = c.power.capacity_ah;
  c.roller.charge_ah = c.power.capacity_ah;
  c.roller.radio_current = c.power.radio_current;
  c.roller.motor = c.power.motor;
  c.roller.pressure_kpa = c.spec.structural_pressure;
  build_configuration(c.configuration, c.spec);
  return c;
}

SimulationConfig load_config(const std::string& path) {
  return parse_config(read_file(path, "config"));
}

SimulationConfig resolve_config(const std::string& name) {
  if (name == "single" || name == "solar" || name == "locomotion") {
    SimulationConfig c;
    c.configuration = name;
    return c;
  }
  if (!std::ifstream(name)) {
    throw Error(ErrorCode::Io, "unknown configuration '" + name +
                                   "': expected single, solar, locomotion or a config file");
  }
  return load_config(name);
}

FeasibilityLimits parse_limits(const std::string& text, FeasibilityLimits base) {
  try {
    const YAML::Node root = YAML::Load(text);
    check_version(root, kConfigFormatVersion, "limits");
    read_limits(root, base, "limits");
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::Parse, std::string("limits: ") + e.what());
  }
  return base;
}

FeasibilityLimits load_limits(const std::string& path, FeasibilityLimits base) {
  return parse_limits(read_file(path, "limits"), base);
}

std::string serialize_config(const SimulationConfig& c) {
  YAML::Emitter out;
  out << YAML::Precision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "format_version" << YAML::Value << kConfigFormatVersion;
  out << YAML::Key << "configuration" << YAML::Value << c.configuration;
  out << YAML::Key << "robot" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tube_length" << YAML::Value << c.spec.tube_length;
  out << YAML::Key << "tube_diameter" << YAML::Value << c.spec.tube_diameter;
  out << YAML::Key << "joint_offset" << YAML::Value << c.spec.joint_offset;
  out << YAML::Key << "effective_side" << YAML::Value << c.spec.effective_side;
  out << YAML::Key << "panel_mass" << YAML::Value << c.spec.panel_mass;
  out << YAML::Key << "masses" << YAML::Value << YAML::BeginMap
      << YAML::Key << "active" << YAML::Value << c.spec.masses.active
      << YAML::Key << "passive" << YAML::Value << c.spec.masses.passive
      << YAML::Key << "triangle" << YAML::Value << c.spec.masses.triangle << YAML::EndMap;
  out << YAML::Key << "pressures" << YAML::Value << YAML::BeginMap
      << YAML::Key << "structural" << YAML::Value << c.spec.structural_pressure
      << YAML::Key << "low_torque" << YAML::Value << c.spec.low_torque_pressure << YAML::EndMap;
  out << YAML::Key << "stowed_volume" << YAML::Value << c.spec.stowed_volume;
  out << YAML::Key << "stowed_footprint" << YAML::Value << c.spec.stowed_footprint;
  out << YAML::EndMap;
  out << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap
      << YAML::Key << "degenerate" << YAML::Value << c.tol.degenerate
      << YAML::Key << "feasibility" << YAML::Value << c.tol.feasibility
      << YAML::Key << "consistency" << YAML::Value << c.tol.consistency
      << YAML::Key << "reconstruction" << YAML::Value << c.tol.reconstruction
      << YAML::Key << "dt" << YAML::Value << c.tol.dt << YAML::EndMap;
  out << YAML::Key << "limits" << YAML::Value << YAML::BeginMap
      << YAML::Key << "min_length" << YAML::Value << c.limits.min_length
      << YAML::Key << "half_margin" << YAML::Value << c.limits.half_margin
      << YAML::Key << "sweep_limit_deg" << YAML::Value << c.limits.sweep_limit_deg << YAML::EndMap;
  out << YAML::Key << "stability" << YAML::Value << YAML::BeginMap
      << YAML::Key << "contact_tol" << YAML::Value << c.stability.contact_tol
      << YAML::Key << "patch_radius" << YAML::Value << c.stability.patch_radius << YAML::EndMap;
  const auto& co = c.power.motor.coefficients;
  out << YAML::Key << "power" << YAML::Value << YAML::BeginMap
      << YAML::Key << "capacity_ah" << YAML::Value << c.power.capacity_ah
      << YAML::Key << "radio_current" << YAML::Value << c.power.radio_current
      << YAML::Key << "motor_current" << YAML::Value << YAML::BeginMap
      << YAML::Key << "coefficients" << YAML::Value << YAML::Flow << YAML::BeginSeq << co[0]
      << co[1] << co[2] << YAML::EndSeq
      << YAML::Key << "provenance" << YAML::Value << c.power.motor_provenance << YAML::EndMap
      << YAML::EndMap;
  out << YAML::Key << "roller" << YAML::Value << YAML::BeginMap
      << YAML::Key << "speed_cap" << YAML::Value << c.roller.speed_cap
      << YAML::Key << "encoder_resolution" << YAML::Value << c.roller.encoder_resolution
      << YAML::Key << "time_constant" << YAML::Value << c.roller.time_constant
      << YAML::Key << "gains" << YAML::Value << YAML::BeginMap
      << YAML::Key << "kp" << YAML::Value << c.roller.gains.kp
      << YAML::Key << "ki" << YAML::Value << c.roller.gains.ki
      << YAML::Key << "kd" << YAML::Value << c.roller.gains.kd << YAML::EndMap << YAML::EndMap;
  out << YAML::Key << "telemetry_hz" << YAML::Value << c.telemetry_hz;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

MotionScript parse_script(const std::string& text, const FeasibilityLimits& limits) {
  try {
    const YAML::Node root = YAML::Load(text);
    check_version(root, kScriptFormatVersion, "script");
    check_keys(root, {"format_version", "name", "steps"}, "script");
    MotionScript script;
    script.name = root["name"] ? root["name"].as<std::string>() : "script";
    if (!root["steps"] || !root["steps"].IsSequence()) {
      throw Error(ErrorCode::Parse, "script: steps must be a list");
    }
    double swept = 0.0;
    for (const auto& step : root["steps"]) {
      if (!step.IsMap() || step.size() != 1) {
        throw Error(ErrorCode::Parse, "script: each step is a single-key map");
      }
      const auto it = step.begin();
      const auto kind = it->first.as<std::string>();
      script.then(parse_step(kind, it->second, limits));
      if (kind == "sweep") {
        swept += it->second["angle_deg"].as<double>();
        if (std::abs(swept) > limits.sweep_limit_deg + 1e-9) {
          throw Error(ErrorCode::LimitViolation,
                      "script sweeps add up to " + format_number(swept) +
                          " deg, beyond the +/-" + format_number(limits.sweep_limit_deg) +
                          " deg limit");
        }
      }
    }
    return script;
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::Parse, std::string("script: ") + e.what());
  }
}

MotionScript load_script(const std::string& path, const FeasibilityLimits& limits) {
  return parse_script(read_file(path, "script"), limits);
}

// ---------------------------------------------------------------- trajectories

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, r.ptr);
}

std::string trajectory_header(const RobotModel& robot) {
  std::string h = "tick,time";
  for (int i = 0; i < robot.topology.node_count(); ++i) {
    const auto s = std::to_string(i);
    h += ",x" + s + ",y" + s + ",z" + s;
  }
  for (int r = 0; r < robot.topology.active_count(); ++r) h += ",d" + std::to_string(r);
  for (int t = 0; t < robot.topology.triangle_count(); ++t) h += ",drift" + std::to_string(t);
  h += ",margin";
  return h;
}

std::string trajectory_row(const TrajectoryFrame& f) {
  std::string row = std::to_string(f.tick) + "," + format_number(f.time);
  for (Eigen::Index i = 0; i < f.state.x.size(); ++i) row += "," + format_number(f.state.x(i));
  for (Eigen::Index i = 0; i < f.state.d.size(); ++i) row += "," + format_number(f.state.d(i));
  for (Eigen::Index i = 0; i < f.step.drift_after.size(); ++i) {
    row += "," + format_number(f.step.drift_after(i));
  }
  row += "," + format_number(f.stability.margin);
  return row;
}

void write_trajectory(std::ostream& out, const RobotModel& robot, const Trajectory& traj) {
  out << trajectory_header(robot) << '\n';
  for (const auto& f : traj.frames) out << trajectory_row(f) << '\n';
}

void write_trajectory(const std::string& path, const RobotModel& robot, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write trajectory file: " + path);
  write_trajectory(out, robot, traj);
  if (!out) throw Error(ErrorCode::Io, "error writing trajectory file: " + path);
}

std::vector<TrajectoryRow> read_trajectory(std::istream& in, const RobotModel& robot) {
  const int n = robot.topology.node_count();
  const int a = robot.topology.active_count();
  const int t = robot.topology.triangle_count();
  std::string line;
  if (!std::getline(in, line) || line != trajectory_header(robot)) {
    throw Error(ErrorCode::Parse, "trajectory header does not match the configuration");
  }
  std::vector<TrajectoryRow> rows;
  const std::size_t cols = 2 + 3 * static_cast<std::size_t>(n) + static_cast<std::size_t>(a + t) + 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      double x = 0.0;
      const auto r = std::from_chars(p, end, x);
      if (r.ec != std::errc()) throw Error(ErrorCode::Parse, "bad number in trajectory row");
      v.push_back(x);
      p = r.ptr + 1;
    }
    if (v.size() != cols) throw Error(ErrorCode::Parse, "trajectory row has the wrong column count");
    TrajectoryRow row;
    row.tick = static_cast<int>(v[0]);
    row.time = v[1];
    row.x = Eigen::Map<Eigen::VectorXd>(v.data() + 2, 3 * n);
    row.d = Eigen::Map<Eigen::VectorXd>(v.data() + 2 + 3 * n, a);
    row.drift = Eigen::Map<Eigen::VectorXd>(v.data() + 2 + 3 * n + a, t);
    row.margin = v.back();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TrajectoryRow> read_trajectory(const std::string& path, const RobotModel& robot) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open trajectory file: " + path);
  return read_trajectory(in, robot);
}

// ---------------------------------------------------------------- metrics

MetricsReport compute_metrics(const SimulationConfig& c) {
  MetricsReport m;
  m.geometry = geometry_metrics(c.spec, c.configuration);
  m.motor_current = motor_current(c.spec.structural_pressure, c.power.motor);
  m.endurance_min = battery_endurance(c.power.capacity_ah, m.motor_current, c.power.radio_current);
  m.masses = c.spec.masses;
  const RobotModel robot = c.build();
  m.triangles = robot.topology.triangle_count();
  m.total_mass = robot.node_masses.sum();
  return m;
}

std::string format_metrics(const MetricsReport& m) {
  std::ostringstream os;
  char buf[128];
  auto line = [&](const char* key, double v, const char* fmt) {
    std::snprintf(buf, sizeof buf, fmt, v);
    os << key << ": " << buf << '\n';
  };
  os << "configuration: " << m.geometry.config << '\n';
  line("deployed_volume_m3", m.geometry.deployed_volume, "%.4f");
  line("stowed_volume_m3", m.geometry.stowed_volume, "%.3f");
  line("stow_ratio", m.geometry.stow_ratio, "%.2f");
  std::snprintf(buf, sizeof buf, "1:%.1f", m.geometry.stow_ratio);
  os << "stow_ratio_label: " << buf << '\n';
  line("stowed_footprint_m2", m.geometry.footprint, "%.3f");
  line("joint_offset_m", m.geometry.joint_offset, "%.4f");
  line("nominal_height_m", m.geometry.nominal_height, "%.3f");
  line("motor_current_a", m.motor_current, "%.3f");
  line("endurance_min", m.endurance_min, "%.2f");
  line("mass_active_roller_kg", m.masses.active, "%.2f");
  line("mass_passive_roller_kg", m.masses.passive, "%.2f");
  line("mass_triangle_kg", m.masses.triangle, "%.2f");
  os << "triangles: " << m.triangles << '\n';
  line("mass_total_kg", m.total_mass, "%.2f");
  return os.str();
}

}  // namespace isotruss
