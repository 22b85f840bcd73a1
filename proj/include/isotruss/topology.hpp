#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace isotruss {

enum class RollerKind { Active, Passive };

struct Edge {
  int tail = 0;
  int head = 0;
  bool operator==(const Edge&) const = default;
};

/// A roller unit sitting at one vertex of a triangle. Active slots carry a
/// global index into the active-roller vector; passive slots carry -1.
struct RollerSlot {
  RollerKind kind = RollerKind::Active;
  int node = 0;
  int active_index = -1;
  bool operator==(const RollerSlot&) const = default;
};

/// A rigid-panel member: fixed length, no tube and no roller.
struct VirtualEdge {
  int a = 0;
  int b = 0;
  double length = 0.0;
  bool operator==(const VirtualEdge&) const = default;
};

/// One tube. `vertices` and `passive_slot` are kept exactly as supplied so the
/// topology round-trips through its file form. `cycle` is the same vertex
/// triple rotated to start at the passive unit: cycle[0] = passive,
/// cycle[1] = roller A, cycle[2] = roller B.
struct Triangle {
  std::array<int, 3> vertices{};
  int passive_slot = 0;
  std::array<int, 3> cycle{};
  bool operator==(const Triangle&) const = default;
};

/// Immutable truss graph. Triangle t owns edges 3t, 3t+1, 3t+2:
///   L1 = passive -> A, L2 = A -> B, L3 = B -> passive.
/// Active rollers of triangle t are 2t (A) and 2t+1 (B). Roller arc positions
/// are measured along the tube from the passive unit, so d_A = L1 and
/// d_B = L1 + L2.
class TrussTopology {
 public:
  static TrussTopology build(int node_count,
                             const std::vector<std::array<int, 3>>& vertex_map,
                             const std::vector<int>& passive_slot,
                             std::vector<VirtualEdge> virtual_edges = {});

  int node_count() const noexcept { return node_count_; }
  int triangle_count() const noexcept { return static_cast<int>(triangles_.size()); }
  int edge_count() const noexcept { return static_cast<int>(edges_.size()); }
  int active_count() const noexcept { return 2 * triangle_count(); }
  int dof() const noexcept { return 3 * node_count_; }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const std::vector<VirtualEdge>& virtual_edges() const noexcept { return virtual_edges_; }

  /// The three roller slots of triangle t, in cycle order (passive, A, B).
  std::array<RollerSlot, 3> rollers(int t) const;

  /// Triangles that have `node` as a vertex.
  std::vector<int> triangles_at(int node) const;

  bool operator==(const TrussTopology&) const = default;

 private:
  int node_count_ = 0;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<VirtualEdge> virtual_edges_;
};

struct IncidenceMatrices {
  Eigen::MatrixXd all_T;       // 3T x 3T, all roller rates -> edge-length rates
  Eigen::MatrixXd active_T;    // 3T x 2T, active roller rates -> edge-length rates
  Eigen::MatrixXd perimeter;   // T x 3T, I (x) [1 1 1]
  Eigen::MatrixXd active_T_pinv;  // 2T x 3T
};

IncidenceMatrices incidence(const TrussTopology& topology);

// Topology files are YAML with a mandatory `format_version`.
std::string serialize_topology(const TrussTopology& topology);
TrussTopology parse_topology(const std::string& text);
TrussTopology load_topology(const std::string& path);

inline constexpr int kTopologyFormatVersion = 1;

}  // namespace isotruss
