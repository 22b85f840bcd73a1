#include "isotruss/configurations.hpp"

#include <cmath>
#include <algorithm>
#include <numbers>

#include "isotruss/error.hpp"

namespace isotruss {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector3d polar(double radius, double deg, double z) {
  const double a = deg * kPi / 180.0;
  return {radius * std::cos(a), radius * std::sin(a), z};
}

RobotModel finish(std::string name, const RobotSpec& spec, TrussTopology topo,
                  const std::vector<Eigen::Vector3d>& nodes, const Eigen::VectorXd& pressure,
                  NodeRoles roles) {
  Eigen::VectorXd x(3 * static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) x.segment<3>(3 * static_cast<Eigen::Index>(i)) = nodes[i];
  const Eigen::VectorXd perimeter =
      Eigen::VectorXd::Constant(topo.triangle_count(), spec.tube_length);
  RobotModel m{std::move(name), spec, topo, state_from_positions(topo, x, perimeter, pressure),
               std::move(roles), lumped_node_masses(topo, spec)};
  return m;
}

}  // namespace

void RobotSpec::validate() const {
  if (!(tube_length > 0.0) || !(effective_side > 0.0) || joint_offset < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "robot spec: lengths must be positive");
  }
  if (std::abs(effective_side - (tube_side() + 2.0 * joint_offset)) > 1e-3) {
    throw Error(ErrorCode::InvalidArgument,
                "robot spec: effective_side must equal tube_length/3 + 2*joint_offset");
  }
  if (std::abs(masses.triangle - (2.0 * masses.active + masses.passive)) > 1e-3) {
    throw Error(ErrorCode::InvalidArgument,
                "robot spec: triangle mass must equal two active plus one passive unit");
  }
}

double octahedron_height(double side) { return side * std::sqrt(6.0) / 3.0; }

Eigen::VectorXd lumped_node_masses(const TrussTopology& topology, const RobotSpec& spec) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(topology.node_count());
  for (int t = 0; t < topology.triangle_count(); ++t) {
    for (const auto& slot : topology.rollers(t)) {
      m(slot.node) += slot.kind == RollerKind::Active ? spec.masses.active : spec.masses.passive;
    }
  }
  const auto& ve = topology.virtual_edges();
  if (spec.panel_mass > 0.0 && !ve.empty()) {
    std::vector<int> panel;
    for (const auto& e : ve) {
      for (int n : {e.a, e.b}) {
        if (std::find(panel.begin(), panel.end(), n) == panel.end()) panel.push_back(n);
      }
    }
    for (int n : panel) m(n) += spec.panel_mass / static_cast<double>(panel.size());
  }
  return m;
}

// Nodes 0-2 on the ground at azimuth 0/120/240, nodes 3-5 on top at
// 60/180/300. Each triangle has its base on the ground and its passive unit at
// the top vertex, so the base is edge L2 between the two active rollers.
RobotModel build_single_octahedron(const RobotSpec& spec) {
  spec.validate();
  const double a = spec.tube_side();
  const double r = a / std::sqrt(3.0);
  const double h = octahedron_height(a);

  std::vector<Eigen::Vector3d> nodes;
  for (int i = 0; i < 3; ++i) nodes.push_back(polar(r, 120.0 * i, 0.0));
  for (int i = 0; i < 3; ++i) nodes.push_back(polar(r, 60.0 + 120.0 * i, h));

  const auto topo = TrussTopology::build(6, {{3, 0, 1}, {4, 1, 2}, {5, 2, 0}}, {0, 0, 0});
  NodeRoles roles;
  roles.ground = {0, 1, 2};
  roles.top = {3, 4, 5};
  return finish("single", spec, topo, nodes,
                Eigen::VectorXd::Constant(3, spec.structural_pressure), roles);
}

// Two stacked octahedra. Ground 0-2 (azimuth 0/120/240, z=0), middle plane
// 3-5 (60/180/300, z=h), top 6-8 (0/120/240, z=2h). Lower triangles stand
// on a ground edge with their apex in the middle plane; upper triangles
// have their base in the middle plane and apex on top. The panel is three
// locked virtual edges among the top nodes.
RobotModel build_solar_array(const RobotSpec& spec) {
  spec.validate();
  const double a = spec.tube_side();
  const double r = a / std::sqrt(3.0);
  const double h = octahedron_height(a);

  std::vector<Eigen::Vector3d> nodes;
  for (int i = 0; i < 3; ++i) nodes.push_back(polar(r, 120.0 * i, 0.0));
  for (int i = 0; i < 3; ++i) nodes.push_back(polar(r, 60.0 + 120.0 * i, h));
  for (int i = 0; i < 3; ++i) nodes.push_back(polar(r, 120.0 * i, 2.0 * h));

  // middle node 3+i sits above ground edge (i, i+1); top node 6+(i+1)%3
  // sits above middle edge (3+i, 3+(i+1)%3)
  std::vector<std::array<int, 3>> vmap;
  for (int i = 0; i < 3; ++i) vmap.push_back({3 + i, i, (i + 1) % 3});
  for (int i = 0; i < 3; ++i) vmap.push_back({6 + (i + 1) % 3, 3 + i, 3 + (i + 1) % 3});
  std::vector<VirtualEdge> panel{{6, 7, a}, {7, 8, a}, {8, 6, a}};
  const auto topo = TrussTopology::build(9, vmap, std::vector<int>(6, 0), panel);

  Eigen::VectorXd pressure(6);
  pressure << Eigen::VectorXd::Constant(3, spec.structural_pressure),
      Eigen::VectorXd::Constant(3, spec.low_torque_pressure);

  NodeRoles roles;
  roles.ground = {0, 1, 2};
  roles.middle = {3, 4, 5};
  roles.top = {6, 7, 8};
  return finish("solar", spec, topo, nodes, pressure, roles);
}

// Two octahedra sharing the central tube triangle, which stands in the
// vertical x-z plane (x forward, z up, y left). Central nodes: 0 front
// (angle 0 in the x-z plane), 1 top centre (120), 2 rear centre (240).
// Left octahedron nodes 3-5 at y=+h (angles 60/180/300), right octahedron
// nodes 6-8 at y=-h. The structure rests on the rear centre node and the two
// lowest side nodes (the feet).
RobotModel build_locomotion(const RobotSpec& spec) {
  spec.validate();
  const double a = spec.tube_side();
  const double r = a / std::sqrt(3.0);
  const double h = octahedron_height(a);
  const double lift = r * std::sin(60.0 * kPi / 180.0);

  auto in_plane = [&](double deg, double y) {
    const double t = deg * kPi / 180.0;
    return Eigen::Vector3d(r * std::cos(t), y, r * std::sin(t) + lift);
  };
  std::vector<Eigen::Vector3d> nodes{in_plane(0, 0), in_plane(120, 0), in_plane(240, 0),
                                     in_plane(60, h), in_plane(180, h), in_plane(300, h),
                                     in_plane(60, -h), in_plane(180, -h), in_plane(300, -h)};

  // central node c connects to the two side nodes that are not its antipode
  std::vector<std::array<int, 3>> vmap{{1, 2, 0},
                                       {0, 3, 5}, {1, 4, 3}, {2, 5, 4},
                                       {0, 8, 6}, {1, 6, 7}, {2, 7, 8}};
  const auto topo = TrussTopology::build(9, vmap, std::vector<int>(7, 0));

  NodeRoles roles;
  roles.ground = {2, 5, 8};
  roles.top_center = 1;
  roles.rear_center = 2;
  roles.front_center = 0;
  roles.left_foot = 5;
  roles.right_foot = 8;
  return finish("locomotion", spec, topo, nodes,
                Eigen::VectorXd::Constant(7, spec.structural_pressure), roles);
}

RobotModel build_configuration(const std::string& name, const RobotSpec& spec) {
  if (name == "single") return build_single_octahedron(spec);
  if (name == "solar") return build_solar_array(spec);
  if (name == "locomotion") return build_locomotion(spec);
  throw Error(ErrorCode::InvalidArgument, "unknown configuration: " + name);
}

GeometryMetrics geometry_metrics(const RobotSpec& spec, const std::string& config) {
  GeometryMetrics g;
  g.config = config;
  if (config == "single") {
    g.octahedra = 1;
  } else if (config == "solar" || config == "locomotion") {
    g.octahedra = 2;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown configuration: " + config);
  }
  const double a = spec.effective_side;
  g.deployed_volume = g.octahedra * (std::sqrt(2.0) / 3.0) * a * a * a;
  const auto vol = spec.stowed_volume.find(config);
  if (vol == spec.stowed_volume.end() || !(vol->second > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "no stowed volume for configuration " + config);
  }
  g.stowed_volume = vol->second;
  g.stow_ratio = g.deployed_volume / g.stowed_volume;
  const auto fp = spec.stowed_footprint.find(config);
  g.footprint = fp == spec.stowed_footprint.end() ? 0.0 : fp->second;
  g.joint_offset = (a - spec.tube_side()) / 2.0;
  g.nominal_height = config == "locomotion" ? a : g.octahedra * octahedron_height(a);
  return g;
}

}  // namespace isotruss
