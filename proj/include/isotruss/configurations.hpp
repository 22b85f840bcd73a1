#pragma once

#include <map>
#include <string>
#include <vector>

#include "isotruss/kinematics.hpp"
#include "isotruss/topology.hpp"

namespace isotruss {

struct RollerMasses {
  double active = 1.98;   // kg
  double passive = 1.0;   // kg
  double triangle = 4.96; // kg, two active + one passive
};

/// Physical parameters of a build. Lengths in m, pressures in kPa.
struct RobotSpec {
  double tube_length = 3.65;
  double tube_diameter = 0.100;
  double joint_offset = 0.2917;
  double effective_side = 1.8;
  RollerMasses masses;
  double panel_mass = 0.0;
  double structural_pressure = 76.0;
  double low_torque_pressure = 41.0;
  std::map<std::string, double> stowed_volume{
      {"single", 0.129}, {"solar", 0.30}, {"locomotion", 0.301}};
  std::map<std::string, double> stowed_footprint{
      {"single", 0.15}, {"solar", 0.87}, {"locomotion", 1.05}};

  /// Tube-frame side of an equilateral triangle.
  double tube_side() const { return tube_length / 3.0; }
  /// Factor from tube-frame distances to joint-centre (physical) distances.
  double effective_scale() const { return effective_side / tube_side(); }

  /// Throws InvalidArgument when the side decomposition or the mass table
  /// is inconsistent.
  void validate() const;
};

/// Named node groups that motion scripts address.
struct NodeRoles {
  std::vector<int> ground;
  std::vector<int> middle;
  std::vector<int> top;
  int top_center = -1;
  int rear_center = -1;
  int front_center = -1;
  int left_foot = -1;
  int right_foot = -1;
};

struct RobotModel {
  std::string name;
  RobotSpec spec;
  TrussTopology topology;
  TrussState initial;
  NodeRoles roles;
  Eigen::VectorXd node_masses;  // kg per node, lumped from roller units
};

RobotModel build_single_octahedron(const RobotSpec& spec = {});
RobotModel build_solar_array(const RobotSpec& spec = {});
RobotModel build_locomotion(const RobotSpec& spec = {});

/// Builds "single", "solar" or "locomotion"; throws InvalidArgument otherwise.
RobotModel build_configuration(const std::string& name, const RobotSpec& spec = {});

/// Lumped node masses: each roller slot puts its unit's mass on its node;
/// `panel_mass` is shared equally by the virtual-edge endpoints.
Eigen::VectorXd lumped_node_masses(const TrussTopology& topology, const RobotSpec& spec);

/// Face-to-face height of a regular octahedron of side a resting on a face.
double octahedron_height(double side);

struct GeometryMetrics {
  std::string config;
  int octahedra = 0;
  double deployed_volume = 0.0;  // m^3, regular octahedra of effective side
  double stowed_volume = 0.0;    // m^3
  double stow_ratio = 0.0;       // deployed / stowed
  double footprint = 0.0;        // stowed footprint, m^2
  double joint_offset = 0.0;     // (effective side - tube side) / 2
  double nominal_height = 0.0;   // effective-side stacked height, m
};

GeometryMetrics geometry_metrics(const RobotSpec& spec, const std::string& config);

}  // namespace isotruss
