#include "rosguard/qp.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace rosguard {

using Eigen::MatrixXd;
using Eigen::VectorXd;

NnlsResult nnls(const MatrixXd& E, const VectorXd& f, double tol) {
  const int n = static_cast<int>(E.cols());
  NnlsResult out;
  out.u = VectorXd::Zero(n);
  if (n == 0) {
    out.residual = -f;
    return out;
  }

  std::vector<bool> passive(n, false);
  std::vector<bool> banned(n, false);
  std::vector<int> pass_idx;
  VectorXd residual = -f;  // E u - f at u = 0
  const double wtol = tol * std::max(1.0, E.cwiseAbs().maxCoeff()) *
                      std::max(1.0, f.cwiseAbs().maxCoeff());

  // Minimum-norm least squares on the passive set; rank deficiency from
  // duplicated constraint rows is common here.
  auto solve_passive = [&](VectorXd& s) {
    const int k = static_cast<int>(pass_idx.size());
    MatrixXd Ep(E.rows(), k);
    for (int j = 0; j < k; ++j) Ep.col(j) = E.col(pass_idx[j]);
    s = Ep.completeOrthogonalDecomposition().solve(f);
  };

  double best_rnorm = residual.norm();
  out.converged = false;
  const int max_iter = 30 * n + 100;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    VectorXd w = -E.transpose() * residual;
    int best = -1;
    double best_w = wtol;
    for (int j = 0; j < n; ++j) {
      if (!passive[j] && !banned[j] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) {
      out.converged = true;
      break;
    }
    passive[best] = true;
    pass_idx.push_back(best);

    VectorXd s;
    solve_passive(s);
    while (true) {
      double min_s = std::numeric_limits<double>::infinity();
      for (int j = 0; j < static_cast<int>(pass_idx.size()); ++j)
        min_s = std::min(min_s, s(j));
      if (min_s > -tol) break;

      double alpha = 1.0;
      for (int j = 0; j < static_cast<int>(pass_idx.size()); ++j) {
        const double uj = out.u(pass_idx[j]);
        if (s(j) <= tol && uj - s(j) > 0) alpha = std::min(alpha, uj / (uj - s(j)));
      }
      for (int j = 0; j < static_cast<int>(pass_idx.size()); ++j) {
        const int col = pass_idx[j];
        out.u(col) += alpha * (s(j) - out.u(col));
      }
      std::vector<int> keep;
      for (int col : pass_idx) {
        if (out.u(col) > tol) {
          keep.push_back(col);
        } else {
          out.u(col) = 0.0;
          passive[col] = false;
        }
      }
      pass_idx = keep;
      if (pass_idx.empty()) {
        s.resize(0);
        break;
      }
      solve_passive(s);
    }
    out.u.setZero();
    for (int j = 0; j < static_cast<int>(pass_idx.size()); ++j)
      out.u(pass_idx[j]) = s(j);
    residual = E * out.u - f;

    // Anti-cycling on degenerate geometry: an index whose activation fails
    // to reduce the residual is parked until some other step makes progress.
    const double rnorm = residual.norm();
    if (rnorm < best_rnorm - 1e-14 * (1.0 + best_rnorm)) {
      best_rnorm = rnorm;
      std::fill(banned.begin(), banned.end(), false);
    } else {
      banned[best] = true;
    }
  }
  out.residual = residual;
  return out;
}

LdpResult least_distance(const MatrixXd& A, const VectorXd& b, double tol) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  LdpResult out;
  if (m == 0) {
    out.z = VectorXd::Zero(n);
    out.multipliers = VectorXd::Zero(0);
    return out;
  }
  // Normalize rows; the set {Az <= b} is unchanged, conditioning improves.
  MatrixXd G(m, n);
  VectorXd h(m), row_scale(m);
  for (int i = 0; i < m; ++i) {
    const double nrm = std::max(A.row(i).norm(), 1e-300);
    row_scale(i) = nrm;
    G.row(i) = -A.row(i) / nrm;  // G z >= h form
    h(i) = -b(i) / nrm;
  }

  // Lawson-Hanson reduction: E = [G^T; h^T], f = e_{n+1}.
  MatrixXd E(n + 1, m);
  E.topRows(n) = G.transpose();
  E.row(n) = h.transpose();
  VectorXd f = VectorXd::Zero(n + 1);
  f(n) = 1.0;

  const NnlsResult nn = nnls(E, f, tol);
  const double rlast = nn.residual(n);
  const double rnorm = nn.residual.norm();
  if (rnorm <= 1e3 * tol || rlast >= -1e3 * tol) {
    out.feasible = false;
    out.z = VectorXd::Zero(n);
    out.multipliers = VectorXd::Zero(m);
    return out;
  }
  out.z = -nn.residual.head(n) / rlast;
  // lambda for the normalized rows is u / (1 - h^T u); undo the scaling.
  out.multipliers = nn.u / (-rlast);

  // Polish: project exactly onto the affine span of the binding rows. The
  // NNLS route is accurate to its residual tolerance; the polish removes
  // that drift when it helps.
  {
    std::vector<int> active;
    for (int i = 0; i < m; ++i)
      if (nn.u(i) > 0.0) active.push_back(i);
    if (!active.empty() && static_cast<int>(active.size()) <= n) {
      MatrixXd Ga(static_cast<int>(active.size()), n);
      VectorXd ha(static_cast<int>(active.size()));
      for (size_t k = 0; k < active.size(); ++k) {
        Ga.row(static_cast<int>(k)) = G.row(active[k]);
        ha(static_cast<int>(k)) = h(active[k]);
      }
      const VectorXd cand = out.z + Ga.transpose() *
          (Ga * Ga.transpose()).completeOrthogonalDecomposition().solve(
              ha - Ga * out.z);
      if ((G * cand - h).minCoeff() >= -1e-9 &&
          cand.squaredNorm() <= out.z.squaredNorm() + 1e-12)
        out.z = cand;
    }
  }

  // The solution is only accepted with a verified KKT certificate; the
  // anti-cycling path above may otherwise stop short on degenerate input.
  const double scale = 1.0 + out.z.norm();
  const double ktol = 1e-7 * scale;
  const VectorXd viol = G * out.z - h;  // >= 0 required
  const VectorXd stationarity = out.z - G.transpose() * out.multipliers;
  double comp = 0.0;
  for (int i = 0; i < m; ++i)
    comp = std::max(comp, std::abs(out.multipliers(i) * viol(i)));
  if (viol.minCoeff() < -ktol || out.multipliers.minCoeff() < -ktol ||
      stationarity.lpNorm<Eigen::Infinity>() > ktol || comp > ktol * scale)
    throw std::runtime_error("least_distance: KKT verification failed");

  for (int i = 0; i < m; ++i) out.multipliers(i) /= row_scale(i);
  return out;
}

PolyProjection project_polyhedron(const VectorXd& y, const MatrixXd& A,
                                  const VectorXd& b, double tol) {
  PolyProjection out;
  if (A.rows() == 0) {
    out.z = y;
    out.multipliers = VectorXd::Zero(0);
    return out;
  }
  // Shift to w = z - y and check whether y is already interior.
  const VectorXd slack = b - A * y;
  if (slack.minCoeff() >= 0) {
    out.z = y;
    out.multipliers = VectorXd::Zero(A.rows());
    return out;
  }
  const LdpResult ldp = least_distance(A, slack, tol);
  out.feasible = ldp.feasible;
  out.multipliers = ldp.multipliers;
  out.z = ldp.feasible ? VectorXd(y + ldp.z) : y;
  return out;
}

}  // namespace rosguard
