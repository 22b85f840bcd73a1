#pragma once

// Independent oracles shared by the unit and acceptance tests. Nothing here
// calls the engine's constraint assembly or solver.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "isotruss/configurations.hpp"
#include "isotruss/kinematics.hpp"
#include "isotruss/topology.hpp"

namespace oracle {

// d|p_i - p_j| / dx, built straight from the edge list.
inline Eigen::MatrixXd length_jacobian(const isotruss::TrussTopology& topo, const Eigen::VectorXd& x) {
  const auto& edges = topo.edges();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(edges.size()), x.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Eigen::Vector3d d = x.segment<3>(3 * edges[k].tail) - x.segment<3>(3 * edges[k].head);
    const Eigen::Vector3d u = d / d.norm();
    const auto r = static_cast<Eigen::Index>(k);
    R.block<1, 3>(r, 3 * edges[k].tail) += u.transpose();
    R.block<1, 3>(r, 3 * edges[k].head) -= u.transpose();
  }
  return R;
}

inline Eigen::VectorXd lengths(const isotruss::TrussTopology& topo, const Eigen::VectorXd& x) {
  Eigen::VectorXd L(topo.edge_count());
  for (int k = 0; k < topo.edge_count(); ++k) {
    const auto& e = topo.edges()[k];
    L(k) = (x.segment<3>(3 * e.tail) - x.segment<3>(3 * e.head)).norm();
  }
  return L;
}

struct Problem {
  isotruss::TrussTopology topology;
  isotruss::TrussState state;
  isotruss::MotionConstraintSet constraints;
};

// Rows for fixed nodes, moves, pinned axes and per-triangle perimeter rates.
inline void stack(const Problem& p, Eigen::MatrixXd& A, Eigen::VectorXd& b) {
  const int n = p.topology.dof();
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  auto unit = [&](int node, int axis, double v) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    r(3 * node + axis) = 1.0;
    rows.push_back(r);
    rhs.push_back(v);
  };
  for (int f : p.constraints.fixed_nodes) {
    for (int k = 0; k < 3; ++k) unit(f, k, 0.0);
  }
  for (const auto& m : p.constraints.moves) {
    for (int k = 0; k < 3; ++k) {
      if (m.axes[k]) unit(m.node, k, m.velocity(k));
    }
  }
  for (const auto& pin : p.constraints.pinned) {
    for (int k = 0; k < 3; ++k) {
      if (pin.axes[k]) unit(pin.node, k, 0.0);
    }
  }
  const Eigen::MatrixXd R = length_jacobian(p.topology, p.state.x);
  for (int t = 0; t < p.topology.triangle_count(); ++t) {
    rows.push_back(R.middleRows(3 * t, 3).colwise().sum());
    rhs.push_back(0.0);
  }
  A.resize(static_cast<Eigen::Index>(rows.size()), n);
  b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    A.row(static_cast<Eigen::Index>(i)) = rows[i];
    b(static_cast<Eigen::Index>(i)) = rhs[i];
  }
}

// Nullspace method: xdot = xp + N z, minimise |R (xp + N z)|^2 by the normal
// equations. Returns nothing when the constraints are rank deficient or the
// reduced Hessian is singular (minimiser not unique).
inline std::optional<Eigen::VectorXd> nullspace_solve(const Problem& p) {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  stack(p, A, b);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, s(0));
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > tol ? 1 : 0;
  if (rank < A.rows()) return std::nullopt;
  const Eigen::VectorXd xp = svd.solve(b);
  const Eigen::MatrixXd N = svd.matrixV().rightCols(A.cols() - rank);
  const Eigen::MatrixXd R = length_jacobian(p.topology, p.state.x);
  const Eigen::MatrixXd RN = R * N;
  const Eigen::MatrixXd H = RN.transpose() * RN;
  if (H.rows() == 0) return xp;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  if (eig.eigenvalues().minCoeff() < 1e-8 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
    return std::nullopt;
  }
  const Eigen::VectorXd z = H.ldlt().solve(-RN.transpose() * (R * xp));
  return Eigen::VectorXd(xp + N * z);
}

inline isotruss::TrussState consistent_state(const isotruss::TrussTopology& topo,
                                             const Eigen::VectorXd& x) {
  const Eigen::VectorXd L = lengths(topo, x);
  Eigen::VectorXd C(topo.triangle_count());
  for (int t = 0; t < topo.triangle_count(); ++t) C(t) = L.segment<3>(3 * t).sum();
  return isotruss::state_from_positions(topo, x, C,
                                        Eigen::VectorXd::Constant(topo.triangle_count(), 76.0));
}

// Random 1-3 triangle instance with a unique minimiser.
inline Problem random_problem(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.12, 0.12);
  std::uniform_real_distribution<double> vel(-0.1, 0.1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> kind(1, 3);
  for (;;) {
    Problem p;
    Eigen::VectorXd x;
    const int k = kind(rng);
    if (k == 3) {
      const auto robot = isotruss::build_single_octahedron();
      p.topology = robot.topology;
      x = robot.initial.x;
    } else {
      const double a = 3.65 / 3.0;
      if (k == 1) {
        p.topology = isotruss::TrussTopology::build(3, {{0, 1, 2}}, {0});
      } else {
        p.topology = isotruss::TrussTopology::build(5, {{0, 1, 2}, {2, 3, 4}}, {0, 1});
      }
      const int n = p.topology.node_count();
      x.resize(3 * n);
      for (int i = 0; i < n; ++i) {
        const double t = 2.0 * M_PI * i / 3.0;
        x.segment<3>(3 * i) << a / std::sqrt(3.0) * std::cos(t) + 0.8 * (i / 3),
            a / std::sqrt(3.0) * std::sin(t), 0.3 * (i / 3);
      }
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += jitter(rng);
    p.state = consistent_state(p.topology, x);
    p.constraints.fixed_nodes.push_back(0);
    for (int i = 1; i < p.topology.node_count(); ++i) {
      const double c = coin(rng);
      if (c < 0.3) {
        p.constraints.moves.push_back({i, Eigen::Vector3d(vel(rng), vel(rng), vel(rng))});
      } else if (c < 0.6) {
        p.constraints.pinned.push_back({i, isotruss::Axes::vertical()});
      }
    }
    if (p.constraints.moves.empty()) continue;
    if (nullspace_solve(p)) return p;
  }
}

// Least-squares slope of log(err) against log(h).
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
  const auto n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double lx = std::log(h[i]), ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Finite-difference slope of |L(x + h v) - L(x) - h R v| for one configuration.
inline double fd_slope(const isotruss::TrussTopology& topo, const Eigen::VectorXd& x,
                       const Eigen::MatrixXd& R, const Eigen::VectorXd& dir, double h0,
                       int halvings) {
  std::vector<double> hs, errs;
  const Eigen::VectorXd L0 = lengths(topo, x);
  double h = h0;
  for (int i = 0; i <= halvings; ++i, h *= 0.5) {
    const Eigen::VectorXd e = lengths(topo, x + h * dir) - L0 - h * (R.topRows(topo.edge_count()) * dir);
    hs.push_back(h);
    errs.push_back(e.norm());
  }
  return loglog_slope(hs, errs);
}

}  // namespace oracle
