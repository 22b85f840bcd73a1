#include "isotruss/topology.hpp"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "isotruss/error.hpp"

namespace isotruss {

namespace {

void check_node(int node, int node_count, const std::string& where) {
  if (node < 0 || node >= node_count) {
    throw Error(ErrorCode::NodeOutOfRange,
                where + ": node id " + std::to_string(node) + " out of range [0, " +
                    std::to_string(node_count) + ")");
  }
}

}  // namespace

TrussTopology TrussTopology::build(int node_count,
                                   const std::vector<std::array<int, 3>>& vertex_map,
                                   const std::vector<int>& passive_slot,
                                   std::vector<VirtualEdge> virtual_edges) {
  if (node_count <= 0) {
    throw Error(ErrorCode::InvalidArgument, "node_count must be positive");
  }
  if (vertex_map.empty()) {
    throw Error(ErrorCode::InvalidArgument, "at least one triangle is required");
  }
  if (passive_slot.size() != vertex_map.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "passive_slot must have one entry per triangle");
  }

  TrussTopology topo;
  topo.node_count_ = node_count;
  topo.triangles_.reserve(vertex_map.size());
  topo.edges_.reserve(3 * vertex_map.size());

  for (std::size_t t = 0; t < vertex_map.size(); ++t) {
    const auto& v = vertex_map[t];
    const std::string where = "triangle " + std::to_string(t);
    for (int node : v) check_node(node, node_count, where);
    if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2]) {
      throw Error(ErrorCode::DuplicateNode, where + ": duplicate node in vertex triple");
    }
    const int p = passive_slot[t];
    if (p < 0 || p > 2) {
      throw Error(ErrorCode::InvalidArgument, where + ": passive_slot must be 0, 1 or 2");
    }

    Triangle tri;
    tri.vertices = v;
    tri.passive_slot = p;
    tri.cycle = {v[p], v[(p + 1) % 3], v[(p + 2) % 3]};
    topo.triangles_.push_back(tri);

    for (int k = 0; k < 3; ++k) {
      topo.edges_.push_back({tri.cycle[k], tri.cycle[(k + 1) % 3]});
    }
  }

  for (std::size_t i = 0; i < virtual_edges.size(); ++i) {
    const auto& ve = virtual_edges[i];
    const std::string where = "virtual edge " + std::to_string(i);
    check_node(ve.a, node_count, where);
    check_node(ve.b, node_count, where);
    if (ve.a == ve.b) {
      throw Error(ErrorCode::DuplicateNode, where + ": endpoints coincide");
    }
    if (!(ve.length > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, where + ": length must be positive");
    }
  }
  topo.virtual_edges_ = std::move(virtual_edges);
  return topo;
}

std::array<RollerSlot, 3> TrussTopology::rollers(int t) const {
  const auto& c = triangles_.at(static_cast<std::size_t>(t)).cycle;
  return {RollerSlot{RollerKind::Passive, c[0], -1},
          RollerSlot{RollerKind::Active, c[1], 2 * t},
          RollerSlot{RollerKind::Active, c[2], 2 * t + 1}};
}

std::vector<int> TrussTopology::triangles_at(int node) const {
  std::vector<int> out;
  for (int t = 0; t < triangle_count(); ++t) {
    const auto& c = triangles_[static_cast<std::size_t>(t)].cycle;
    if (c[0] == node || c[1] == node || c[2] == node) out.push_back(t);
  }
  return out;
}

IncidenceMatrices incidence(const TrussTopology& topology) {
  const int tri = topology.triangle_count();
  IncidenceMatrices m;
  m.all_T = Eigen::MatrixXd::Zero(3 * tri, 3 * tri);
  m.active_T = Eigen::MatrixXd::Zero(3 * tri, 2 * tri);
  m.perimeter = Eigen::MatrixXd::Zero(tri, 3 * tri);

  // A roller advancing in cycle direction lengthens the edge arriving at its
  // vertex and shortens the edge leaving it.
  for (int t = 0; t < tri; ++t) {
    const int e = 3 * t;
    // passive unit sits between L3 (arriving) and L1 (leaving)
    m.all_T(e + 2, e) = 1.0;
    m.all_T(e + 0, e) = -1.0;
    // roller A between L1 and L2
    m.all_T(e + 0, e + 1) = 1.0;
    m.all_T(e + 1, e + 1) = -1.0;
    // roller B between L2 and L3
    m.all_T(e + 1, e + 2) = 1.0;
    m.all_T(e + 2, e + 2) = -1.0;

    m.active_T.col(2 * t) = m.all_T.col(e + 1);
    m.active_T.col(2 * t + 1) = m.all_T.col(e + 2);
    m.perimeter.block(t, e, 1, 3).setOnes();
  }
  m.active_T_pinv =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(m.active_T).pseudoInverse();
  return m;
}

std::string serialize_topology(const TrussTopology& topology) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "format_version" << YAML::Value << kTopologyFormatVersion;
  out << YAML::Key << "node_count" << YAML::Value << topology.node_count();
  out << YAML::Key << "triangles" << YAML::Value << YAML::BeginSeq;
  for (const auto& tri : topology.triangles()) {
    out << YAML::BeginMap;
    out << YAML::Key << "nodes" << YAML::Value << YAML::Flow << YAML::BeginSeq
        << tri.vertices[0] << tri.vertices[1] << tri.vertices[2] << YAML::EndSeq;
    out << YAML::Key << "passive_slot" << YAML::Value << tri.passive_slot;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "virtual_edges" << YAML::Value << YAML::BeginSeq;
  for (const auto& ve : topology.virtual_edges()) {
    out << YAML::BeginMap;
    out << YAML::Key << "nodes" << YAML::Value << YAML::Flow << YAML::BeginSeq << ve.a
        << ve.b << YAML::EndSeq;
    out << YAML::Key << "length" << YAML::Value << YAML::Precision(17) << ve.length;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

TrussTopology parse_topology(const std::string& text) {
  try {
    const YAML::Node root = YAML::Load(text);
    if (!root["format_version"]) {
      throw Error(ErrorCode::Parse, "topology: missing format_version");
    }
    const int version = root["format_version"].as<int>();
    if (version != kTopologyFormatVersion) {
      throw Error(ErrorCode::Version,
                  "topology: unsupported format_version " + std::to_string(version));
    }
    const int n = root["node_count"].as<int>();
    std::vector<std::array<int, 3>> vmap;
    std::vector<int> passive;
    for (const auto& t : root["triangles"]) {
      const auto nodes = t["nodes"].as<std::vector<int>>();
      if (nodes.size() != 3) {
        throw Error(ErrorCode::Parse, "topology: triangle needs exactly 3 nodes");
      }
      vmap.push_back({nodes[0], nodes[1], nodes[2]});
      passive.push_back(t["passive_slot"] ? t["passive_slot"].as<int>() : 0);
    }
    std::vector<VirtualEdge> virt;
    if (root["virtual_edges"]) {
      for (const auto& v : root["virtual_edges"]) {
        const auto nodes = v["nodes"].as<std::vector<int>>();
        if (nodes.size() != 2) {
          throw Error(ErrorCode::Parse, "topology: virtual edge needs exactly 2 nodes");
        }
        virt.push_back({nodes[0], nodes[1], v["length"].as<double>()});
      }
    }
    return TrussTopology::build(n, vmap, passive, std::move(virt));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::Parse, std::string("topology: ") + e.what());
  }
}

TrussTopology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open topology file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str());
}

}  // namespace isotruss
