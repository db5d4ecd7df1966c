#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "rosguard/qp.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace rosguard;

namespace {

// KKT check for min (1/2)||z - y||^2 s.t. A z <= b.
void check_projection_kkt(const VectorXd& y, const MatrixXd& A,
                          const VectorXd& b, const PolyProjection& p,
                          double tol = 1e-7) {
  REQUIRE(p.feasible);
  const VectorXd viol = A * p.z - b;
  CHECK(viol.maxCoeff() <= tol);
  CHECK(p.multipliers.minCoeff() >= -tol);
  const VectorXd stationarity = p.z - y + A.transpose() * p.multipliers;
  CHECK(stationarity.lpNorm<Eigen::Infinity>() <= tol * (1.0 + y.norm()));
  for (int i = 0; i < A.rows(); ++i)
    CHECK(std::abs(p.multipliers(i) * viol(i)) <= tol * (1.0 + y.norm()));
}

}  // namespace

TEST_CASE("nnls matches closed forms on tiny systems") {
  MatrixXd E(2, 2);
  E << 1, 0, 0, 1;
  VectorXd f(2);
  f << 3, -2;
  auto r = nnls(E, f);
  CHECK(r.u(0) == doctest::Approx(3.0));
  CHECK(r.u(1) == doctest::Approx(0.0));

  // Unconstrained optimum already nonnegative.
  f << 1, 2;
  r = nnls(E, f);
  CHECK(r.u(0) == doctest::Approx(1.0));
  CHECK(r.u(1) == doctest::Approx(2.0));
  CHECK(r.residual.norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nnls satisfies KKT on random instances") {
  std::mt19937 rng(7);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 2 + static_cast<int>(rng() % 8);
    const int cols = 1 + static_cast<int>(rng() % 8);
    MatrixXd E(rows, cols);
    VectorXd f(rows);
    for (int i = 0; i < rows; ++i) {
      f(i) = gauss(rng);
      for (int j = 0; j < cols; ++j) E(i, j) = gauss(rng);
    }
    const auto r = nnls(E, f);
    const VectorXd grad = E.transpose() * (E * r.u - f);
    for (int j = 0; j < cols; ++j) {
      CHECK(r.u(j) >= -1e-12);
      if (r.u(j) > 1e-9) {
        CHECK(std::abs(grad(j)) <= 1e-7 * (1.0 + f.norm()));
      } else {
        CHECK(grad(j) >= -1e-7 * (1.0 + f.norm()));
      }
    }
  }
}

TEST_CASE("least_distance detects infeasible systems") {
  MatrixXd A(2, 1);
  A << 1, -1;
  VectorXd b(2);
  b << -1, -1;  // z <= -1 and z >= 1
  const auto r = least_distance(A, b);
  CHECK_FALSE(r.feasible);
}

TEST_CASE("projection onto a box clamps coordinates") {
  MatrixXd A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  VectorXd b(4);
  b << 1, 1, 1, 1;  // [-1,1]^2
  VectorXd y(2);
  y << 3.0, -0.25;
  const auto p = project_polyhedron(y, A, b);
  CHECK(p.z(0) == doctest::Approx(1.0));
  CHECK(p.z(1) == doctest::Approx(-0.25));
  check_projection_kkt(y, A, b, p);
}

TEST_CASE("projection KKT holds on random polyhedra") {
  std::mt19937 rng(21);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const int m = 1 + static_cast<int>(rng() % 14);
    MatrixXd A(m, n);
    VectorXd b(m), y(n), interior(n);
    for (int j = 0; j < n; ++j) {
      y(j) = 3.0 * gauss(rng);
      interior(j) = gauss(rng);
    }
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
      // Guarantee nonempty: make `interior` strictly feasible.
      b(i) = A.row(i).dot(interior) + 0.1 + std::abs(gauss(rng));
    }
    const auto p = project_polyhedron(y, A, b);
    check_projection_kkt(y, A, b, p);

    // Projection of a feasible point is itself.
    const auto q = project_polyhedron(p.z, A, b);
    CHECK((q.z - p.z).norm() <= 1e-8 * (1.0 + p.z.norm()));
  }
}

TEST_CASE("projection agrees with dense search in 2d") {
  MatrixXd A(3, 2);
  A << 1, 1, -1, 0, 0, -1;
  VectorXd b(3);
  b << 1, 0, 0;  // simplex
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd y(2);
    y << unif(rng), unif(rng);
    const auto p = project_polyhedron(y, A, b);
    double best = 1e300;
    VectorXd zbest(2);
    const int grid = 400;
    for (int i = 0; i <= grid; ++i) {
      for (int j = 0; j <= grid - i; ++j) {
        VectorXd z(2);
        z << double(i) / grid, double(j) / grid;
        const double d = (z - y).squaredNorm();
        if (d < best) {
          best = d;
          zbest = z;
        }
      }
    }
    CHECK((p.z - zbest).norm() <= 5e-3);
  }
}
