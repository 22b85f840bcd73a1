#include "isotruss/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "isotruss/error.hpp"

namespace isotruss {

namespace {

double distance(const Eigen::VectorXd& x, int i, int j) {
  return (x.segment<3>(3 * i) - x.segment<3>(3 * j)).norm();
}

void check_node(int node, const TrussTopology& topology, const char* what) {
  if (node < 0 || node >= topology.node_count()) {
    throw Error(ErrorCode::NodeOutOfRange,
                std::string(what) + ": node id " + std::to_string(node) + " out of range");
  }
}

void check_x(const Eigen::VectorXd& x, const TrussTopology& topology) {
  if (x.size() != topology.dof()) {
    throw Error(ErrorCode::InvalidArgument, "position vector must have 3n entries");
  }
}

// Min-norm least squares step for an under- or over-determined system.
Eigen::VectorXd lstsq(const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
  cod.setThreshold(1e-12);
  return cod.solve(rhs);
}

}  // namespace

std::vector<bool> MotionConstraintSet::held_components(int node_count) const {
  std::vector<bool> held(static_cast<std::size_t>(3 * node_count), false);
  for (int n : fixed_nodes) {
    if (n < 0 || n >= node_count) continue;
    for (int k = 0; k < 3; ++k) held[static_cast<std::size_t>(3 * n + k)] = true;
  }
  for (const auto& p : pinned) {
    if (p.node < 0 || p.node >= node_count) continue;
    for (int k = 0; k < 3; ++k) {
      if (p.axes[k]) held[static_cast<std::size_t>(3 * p.node + k)] = true;
    }
  }
  return held;
}

Eigen::VectorXd edge_lengths(const Eigen::VectorXd& x, const TrussTopology& topology,
                             const Tolerances& tol) {
  check_x(x, topology);
  Eigen::VectorXd L(topology.edge_count());
  for (int k = 0; k < topology.edge_count(); ++k) {
    const auto& e = topology.edges()[static_cast<std::size_t>(k)];
    L(k) = distance(x, e.tail, e.head);
    if (L(k) < tol.degenerate) {
      throw Error(ErrorCode::DegenerateEdge, "edge " + std::to_string(k) + " (" +
                                                 std::to_string(e.tail) + "->" +
                                                 std::to_string(e.head) + ") is degenerate");
    }
  }
  return L;
}

Eigen::VectorXd virtual_edge_lengths(const Eigen::VectorXd& x, const TrussTopology& topology) {
  check_x(x, topology);
  const auto& ve = topology.virtual_edges();
  Eigen::VectorXd L(static_cast<Eigen::Index>(ve.size()));
  for (std::size_t k = 0; k < ve.size(); ++k) {
    L(static_cast<Eigen::Index>(k)) = distance(x, ve[k].a, ve[k].b);
  }
  return L;
}

Eigen::VectorXd implied_lengths(const TrussState& state, const TrussTopology& topology) {
  const int tri = topology.triangle_count();
  Eigen::VectorXd L(3 * tri);
  for (int t = 0; t < tri; ++t) {
    const double dA = state.d(2 * t);
    const double dB = state.d(2 * t + 1);
    L(3 * t) = dA;
    L(3 * t + 1) = dB - dA;
    L(3 * t + 2) = state.perimeter(t) - dB;
  }
  return L;
}

TrussState state_from_positions(const TrussTopology& topology, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& perimeter,
                                const Eigen::VectorXd& pressure) {
  const int tri = topology.triangle_count();
  if (perimeter.size() != tri || pressure.size() != tri) {
    throw Error(ErrorCode::InvalidArgument, "perimeter and pressure need one entry per triangle");
  }
  TrussState s;
  s.x = x;
  s.perimeter = perimeter;
  s.pressure = pressure;
  s.d.resize(2 * tri);
  const Eigen::VectorXd L = edge_lengths(x, topology);
  for (int t = 0; t < tri; ++t) {
    s.d(2 * t) = L(3 * t);
    s.d(2 * t + 1) = L(3 * t) + L(3 * t + 1);
  }
  return s;
}

Eigen::MatrixXd rigidity_matrix(const Eigen::VectorXd& x, const TrussTopology& topology,
                                const Tolerances& tol) {
  check_x(x, topology);
  const int ne = topology.edge_count();
  const auto& ve = topology.virtual_edges();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(ne + static_cast<int>(ve.size()), topology.dof());

  auto fill = [&](int row, int i, int j) {
    const Eigen::Vector3d diff = x.segment<3>(3 * i) - x.segment<3>(3 * j);
    const double len = diff.norm();
    if (len < tol.degenerate) {
      throw Error(ErrorCode::DegenerateEdge,
                  "edge between nodes " + std::to_string(i) + " and " + std::to_string(j) +
                      " is degenerate");
    }
    const Eigen::Vector3d u = diff / len;
    R.block<1, 3>(row, 3 * i) = u.transpose();
    R.block<1, 3>(row, 3 * j) = -u.transpose();
  };

  for (int k = 0; k < ne; ++k) {
    const auto& e = topology.edges()[static_cast<std::size_t>(k)];
    fill(k, e.tail, e.head);
  }
  for (std::size_t k = 0; k < ve.size(); ++k) {
    fill(ne + static_cast<int>(k), ve[k].a, ve[k].b);
  }
  return R;
}

ConstraintSystem constraint_system(const TrussState& state, const TrussTopology& topology,
                                   const MotionConstraintSet& c, const Eigen::MatrixXd& R) {
  const int N = topology.dof();
  const int tri = topology.triangle_count();
  const int ne = topology.edge_count();

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  std::vector<std::string> block;
  auto push = [&](Eigen::RowVectorXd row, double value, const char* name) {
    rows.push_back(std::move(row));
    rhs.push_back(value);
    block.emplace_back(name);
  };
  auto unit_row = [&](int node, int axis) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(N);
    row(3 * node + axis) = 1.0;
    return row;
  };

  for (const auto& m : c.moves) {
    check_node(m.node, topology, "move");
    for (int k = 0; k < 3; ++k) {
      if (m.axes[k]) push(unit_row(m.node, k), m.velocity(k), "move");
    }
  }
  for (int n : c.fixed_nodes) {
    check_node(n, topology, "fixed");
    for (int k = 0; k < 3; ++k) push(unit_row(n, k), 0.0, "fixed");
  }
  for (const auto& p : c.pinned) {
    check_node(p.node, topology, "pinned");
    for (int k = 0; k < 3; ++k) {
      if (p.axes[k]) push(unit_row(p.node, k), 0.0, "pinned");
    }
  }
  for (const auto& cm : c.centroid_moves) {
    if (cm.nodes.empty()) throw Error(ErrorCode::InvalidArgument, "centroid move without nodes");
    if (!cm.weights.empty() && cm.weights.size() != cm.nodes.size()) {
      throw Error(ErrorCode::InvalidArgument, "centroid weights must match nodes");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < cm.nodes.size(); ++i) {
      total += cm.weights.empty() ? 1.0 : cm.weights[i];
    }
    if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "centroid weights sum to zero");
    for (int k = 0; k < 3; ++k) {
      if (!cm.axes[k]) continue;
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(N);
      for (std::size_t i = 0; i < cm.nodes.size(); ++i) {
        check_node(cm.nodes[i], topology, "centroid");
        row(3 * cm.nodes[i] + k) += (cm.weights.empty() ? 1.0 : cm.weights[i]) / total;
      }
      push(row, cm.velocity(k), "centroid");
    }
  }
  for (const auto& [edge, rate] : c.edge_rates) {
    if (edge < 0 || edge >= ne) throw Error(ErrorCode::InvalidArgument, "edge-rate edge out of range");
    push(R.row(edge), rate, "edge-rate");
  }
  // P R xdot = 0: one row per triangle
  for (int t = 0; t < tri; ++t) {
    push(R.row(3 * t) + R.row(3 * t + 1) + R.row(3 * t + 2), 0.0, "perimeter");
  }
  if (c.rigid_edges_locked) {
    for (int k = ne; k < R.rows(); ++k) push(R.row(k), 0.0, "virtual");
  }
  (void)state;

  ConstraintSystem sys;
  sys.A.resize(static_cast<Eigen::Index>(rows.size()), N);
  sys.b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sys.A.row(static_cast<Eigen::Index>(i)) = rows[i];
    sys.b(static_cast<Eigen::Index>(i)) = rhs[i];
  }
  sys.block = std::move(block);
  return sys;
}

VelocitySolution solve_velocities(const TrussState& state, const TrussTopology& topology,
                                  const MotionConstraintSet& constraints, const Tolerances& tol) {
  const int N = topology.dof();
  const Eigen::MatrixXd R = rigidity_matrix(state.x, topology, tol);
  const ConstraintSystem sys = constraint_system(state, topology, constraints, R);
  const Eigen::MatrixXd& A = sys.A;
  const Eigen::VectorXd& b = sys.b;

  // Consistency of the equality system, independent of the objective.
  const Eigen::VectorXd x_ls = lstsq(A, b);
  const Eigen::VectorXd res = A * x_ls - b;
  if (res.lpNorm<Eigen::Infinity>() > tol.feasibility) {
    std::set<std::string> violated;
    for (Eigen::Index i = 0; i < res.size(); ++i) {
      if (std::abs(res(i)) > tol.feasibility) violated.insert(sys.block[static_cast<std::size_t>(i)]);
    }
    std::string list;
    for (const auto& v : violated) list += (list.empty() ? "" : ", ") + v;
    throw Error(ErrorCode::Infeasible, "inconsistent constraints (blocks: " + list +
                                           "; residual " +
                                           std::to_string(res.lpNorm<Eigen::Infinity>()) + ")");
  }

  // Drop linearly dependent rows so the KKT matrix is singular only when the
  // minimiser itself is not unique.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.transpose());
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  const auto& perm = qr.colsPermutation().indices();
  Eigen::MatrixXd Ar(rank, N);
  Eigen::VectorXd br(rank);
  std::vector<int> keep(perm.data(), perm.data() + rank);
  std::sort(keep.begin(), keep.end());
  for (int i = 0; i < rank; ++i) {
    Ar.row(i) = A.row(keep[static_cast<std::size_t>(i)]);
    br(i) = b(keep[static_cast<std::size_t>(i)]);
  }

  const int m = rank;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N + m, N + m);
  K.topLeftCorner(N, N) = 2.0 * R.transpose() * R;
  K.topRightCorner(N, m) = Ar.transpose();
  K.bottomLeftCorner(m, N) = Ar;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + m);
  rhs.tail(m) = br;

  VelocitySolution out;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  lu.setThreshold(1e-10);
  Eigen::VectorXd sol;
  if (lu.isInvertible()) {
    sol = lu.solve(rhs);
  } else {
    sol = lstsq(K, rhs);
    out.diagnostics.rank_deficient = true;
  }
  out.xdot = sol.head(N);

  const Eigen::VectorXd Lrate = R * out.xdot;
  out.diagnostics.objective = Lrate.squaredNorm();
  out.diagnostics.max_constraint_residual = (A * out.xdot - b).lpNorm<Eigen::Infinity>();
  out.diagnostics.kkt_residual = (K * sol - rhs).norm();
  out.diagnostics.dropped_rows = static_cast<int>(A.rows()) - rank;
  return out;
}

Eigen::VectorXd roller_rates_from_lengths(const Eigen::VectorXd& Ldot, const IncidenceMatrices& inc,
                                         const Tolerances& tol) {
  if (Ldot.size() != inc.active_T.rows()) {
    throw Error(ErrorCode::InvalidArgument, "edge-rate vector has the wrong size");
  }
  const Eigen::VectorXd ddot = inc.active_T_pinv * Ldot;
  const double err = (inc.active_T * ddot - Ldot).lpNorm<Eigen::Infinity>();
  if (err > tol.reconstruction) {
    throw Error(ErrorCode::Reconstruction,
                "edge-length rates are not perimeter-conserving (reconstruction error " +
                    std::to_string(err) + ")");
  }
  return ddot;
}

Eigen::VectorXd roller_rates(const Eigen::VectorXd& xdot, const TrussState& state,
                             const TrussTopology& topology, const IncidenceMatrices& inc,
                             const Tolerances& tol) {
  const Eigen::MatrixXd R = rigidity_matrix(state.x, topology, tol);
  return roller_rates_from_lengths(R.topRows(topology.edge_count()) * xdot, inc, tol);
}

namespace {

Eigen::VectorXd relative_drift(const Eigen::VectorXd& L, const TrussState& s, int tri) {
  Eigen::VectorXd drift(tri);
  for (int t = 0; t < tri; ++t) {
    drift(t) = std::abs(L.segment<3>(3 * t).sum() - s.perimeter(t)) / s.perimeter(t);
  }
  return drift;
}

}  // namespace

StepResult advance(const TrussState& state, const TrussTopology& topology,
                   const Eigen::VectorXd& xdot, const Eigen::VectorXd& ddot, double dt,
                   const MotionConstraintSet& held, const Tolerances& tol) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
  if (xdot.size() != state.x.size() || ddot.size() != state.d.size()) {
    throw Error(ErrorCode::InvalidArgument, "rate vectors do not match the state");
  }
  const int tri = topology.triangle_count();
  const int ne = topology.edge_count();

  StepResult out;
  out.state = state;
  out.state.x += dt * xdot;
  out.state.d += dt * ddot;

  Eigen::VectorXd target(ne + static_cast<int>(topology.virtual_edges().size()));
  target.head(ne) = implied_lengths(out.state, topology);
  for (std::size_t k = 0; k < topology.virtual_edges().size(); ++k) {
    target(ne + static_cast<int>(k)) = topology.virtual_edges()[k].length;
  }
  const int rows = held.rigid_edges_locked ? static_cast<int>(target.size()) : ne;

  auto lengths = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd L(target.size());
    L.head(ne) = edge_lengths(x, topology, tol);
    L.tail(target.size() - ne) = virtual_edge_lengths(x, topology);
    return L;
  };

  Eigen::VectorXd L = lengths(out.state.x);
  out.diagnostics.drift_before = relative_drift(L.head(ne), out.state, tri);
  out.diagnostics.mismatch_before = (L.head(rows) - target.head(rows)).lpNorm<Eigen::Infinity>();

  const std::vector<bool> hold = held.held_components(topology.node_count());
  std::vector<int> free;
  for (int i = 0; i < topology.dof(); ++i) {
    if (!hold[static_cast<std::size_t>(i)]) free.push_back(i);
  }

  const Eigen::VectorXd x_start = out.state.x;
  double mismatch = out.diagnostics.mismatch_before;
  int it = 0;
  for (; it < 25 && mismatch > 1e-13; ++it) {
    const Eigen::MatrixXd R = rigidity_matrix(out.state.x, topology, tol);
    Eigen::MatrixXd J(rows, static_cast<Eigen::Index>(free.size()));
    for (std::size_t c = 0; c < free.size(); ++c) {
      J.col(static_cast<Eigen::Index>(c)) = R.col(free[c]).head(rows);
    }
    const Eigen::VectorXd r = L.head(rows) - target.head(rows);
    const Eigen::VectorXd delta = lstsq(J, -r);
    for (std::size_t c = 0; c < free.size(); ++c) {
      out.state.x(free[c]) += delta(static_cast<Eigen::Index>(c));
    }
    L = lengths(out.state.x);
    const double next = (L.head(rows) - target.head(rows)).lpNorm<Eigen::Infinity>();
    if (next >= mismatch && it > 0) {
      mismatch = next;
      ++it;
      break;
    }
    mismatch = next;
  }
  // Over-determined holds: the Euler-updated d is not realisable. Restore the
  // perimeters (and panel lengths) exactly, then take d from the positions.
  if (mismatch > 1e-12) {
    const int T = tri;
    const int nv = rows - ne;
    auto residual = [&](const Eigen::VectorXd& Lx) {
      Eigen::VectorXd g(T + nv);
      for (int t = 0; t < T; ++t) g(t) = Lx.segment<3>(3 * t).sum() - out.state.perimeter(t);
      g.tail(nv) = Lx.segment(ne, nv) - target.segment(ne, nv);
      return g;
    };
    Eigen::VectorXd g = residual(L);
    for (int k = 0; k < 25 && g.lpNorm<Eigen::Infinity>() > 1e-13; ++k, ++it) {
      const Eigen::MatrixXd R = rigidity_matrix(out.state.x, topology, tol);
      Eigen::MatrixXd J(T + nv, static_cast<Eigen::Index>(free.size()));
      for (std::size_t c = 0; c < free.size(); ++c) {
        const Eigen::VectorXd col = R.col(free[c]);
        for (int t = 0; t < T; ++t) J(t, static_cast<Eigen::Index>(c)) = col.segment<3>(3 * t).sum();
        J.block(T, static_cast<Eigen::Index>(c), nv, 1) = col.segment(ne, nv);
      }
      const Eigen::VectorXd delta = lstsq(J, -g);
      for (std::size_t c = 0; c < free.size(); ++c) {
        out.state.x(free[c]) += delta(static_cast<Eigen::Index>(c));
      }
      L = lengths(out.state.x);
      g = residual(L);
    }
    if (g.lpNorm<Eigen::Infinity>() > tol.consistency * 1e-3) {
      throw Error(ErrorCode::Consistency,
                  "node positions cannot restore the tube perimeters (residual " +
                      std::to_string(g.lpNorm<Eigen::Infinity>()) + " m)");
    }
    const Eigen::VectorXd d_before = out.state.d;
    for (int t = 0; t < T; ++t) {
      out.state.d(2 * t) = L(3 * t);
      out.state.d(2 * t + 1) = L(3 * t) + L(3 * t + 1);
    }
    out.diagnostics.roller_correction = (out.state.d - d_before).lpNorm<Eigen::Infinity>();
    out.diagnostics.resynchronised = true;
    target.head(ne) = implied_lengths(out.state, topology);
    mismatch = (L.head(rows) - target.head(rows)).lpNorm<Eigen::Infinity>();
  }
  out.diagnostics.projection_iterations = it;
  out.diagnostics.mismatch_after = mismatch;
  out.diagnostics.correction = (out.state.x - x_start).lpNorm<Eigen::Infinity>();
  out.diagnostics.drift_after = relative_drift(L.head(ne), out.state, tri);

  if (mismatch > tol.consistency) {
    throw Error(ErrorCode::Consistency,
                "node positions cannot realise the roller-implied edge lengths (mismatch " +
                    std::to_string(mismatch) + " m)");
  }
  return out;
}

std::string FeasibilityReport::describe() const {
  std::ostringstream os;
  if (!ordering_ok) {
    os << "roller ordering broken in triangle " << nearest.triangle;
    return os.str();
  }
  os << "triangle " << nearest.triangle << " edge L" << nearest.edge + 1 << " "
     << (nearest_is_lower ? "at roller-contact limit" : "at triangle-inequality limit")
     << " (margin " << min_margin << " m)";
  return os.str();
}

FeasibilityReport check_feasibility(const TrussState& state, const TrussTopology& topology,
                                    const FeasibilityLimits& limits) {
  const int tri = topology.triangle_count();
  const Eigen::VectorXd L = implied_lengths(state, topology);
  FeasibilityReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < tri; ++t) {
    const double C = state.perimeter(t);
    const double dA = state.d(2 * t);
    const double dB = state.d(2 * t + 1);
    if (!(0.0 < dA && dA < dB && dB < C)) {
      rep.ordering_ok = false;
      rep.feasible = false;
      rep.nearest = {t, -1, 0.0, 0.0};
      rep.min_margin = -std::numeric_limits<double>::infinity();
    }
    for (int k = 0; k < 3; ++k) {
      EdgeMargin em;
      em.triangle = t;
      em.edge = k;
      em.lower = L(3 * t + k) - limits.min_length;
      em.upper = C / 2.0 - limits.half_margin - L(3 * t + k);
      rep.edges.push_back(em);
      if (rep.ordering_ok) {
        const double m = std::min(em.lower, em.upper);
        if (m < rep.min_margin) {
          rep.min_margin = m;
          rep.nearest = em;
          rep.nearest_is_lower = em.lower <= em.upper;
        }
      }
    }
  }
  if (rep.min_margin < 0.0) rep.feasible = false;
  rep.at_limit = rep.ordering_ok && std::abs(rep.min_margin) <= 1e-9;
  return rep;
}

StepResult integrate_step(const TrussState& state, const TrussTopology& topology,
                          const Eigen::VectorXd& xdot, const Eigen::VectorXd& ddot, double dt,
                          const MotionConstraintSet& held, const FeasibilityLimits& limits,
                          const Tolerances& tol) {
  StepResult r = advance(state, topology, xdot, ddot, dt, held, tol);
  const FeasibilityReport rep = check_feasibility(r.state, topology, limits);
  if (!rep.feasible) {
    throw Error(ErrorCode::LimitViolation, "limit violation: " + rep.describe());
  }
  return r;
}

}  // namespace isotruss
