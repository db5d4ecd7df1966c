#pragma once

#include <Eigen/Dense>

namespace rosguard {

/// Nonnegative least squares: minimize ||E u - f||_2 subject to u >= 0.
/// Lawson-Hanson active-set method; terminates finitely.
struct NnlsResult {
  Eigen::VectorXd u;
  Eigen::VectorXd residual;  // E u - f
  int iterations = 0;
  bool converged = true;
};

NnlsResult nnls(const Eigen::MatrixXd& E, const Eigen::VectorXd& f,
                double tol = 1e-12);

/// Least-distance program: minimize (1/2)||z||^2 subject to A z <= b.
/// Solved through the NNLS reduction. `feasible` is false when the
/// constraint set is empty (within tolerance).
struct LdpResult {
  Eigen::VectorXd z;
  Eigen::VectorXd multipliers;  // lambda >= 0 with z + A^T lambda = 0
  bool feasible = true;
};

LdpResult least_distance(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         double tol = 1e-12);

/// Euclidean projection of y onto the polyhedron {z : A z <= b}.
/// KKT at the solution: z = y - A^T lambda, lambda >= 0, lambda_i (A z - b)_i = 0.
struct PolyProjection {
  Eigen::VectorXd z;
  Eigen::VectorXd multipliers;
  bool feasible = true;
};

PolyProjection project_polyhedron(const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd& A,
                                  const Eigen::VectorXd& b,
                                  double tol = 1e-12);

}  // namespace rosguard
