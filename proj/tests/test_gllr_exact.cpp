#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <vector>

#include "instance_gen.hpp"
#include "rosguard/errors.hpp"
#include "rosguard/gllr_exact.hpp"
#include "rosguard/gllr_relaxed.hpp"

using Eigen::VectorXd;
using namespace rosguard;
using testgen::InstanceOptions;
using testgen::SetKind;

namespace {

// Independent dense-grid oracle over the nonconvex feasible set (M <= 2).
// Per coordinate the candidate values are 0 and the band +-[rho_lo, rho_hi]
// discretized at `step`.
double grid_oracle(const EvidenceProblem& prob, double step = 0.005) {
  REQUIRE(prob.dim() <= 2);
  std::vector<double> levels{0.0};
  for (double v = prob.rho_lo; v <= prob.rho_hi + 1e-12; v += step) {
    levels.push_back(v);
    levels.push_back(-v);
  }
  levels.push_back(prob.rho_hi);
  levels.push_back(-prob.rho_hi);

  double best = std::numeric_limits<double>::infinity();
  VectorXd mu(prob.dim());
  if (prob.dim() == 1) {
    for (double a : levels) {
      mu(0) = a;
      if (support_violation(prob, mu) > 1e-9) continue;
      best = std::min(best, prob.objective(mu));
    }
    return best;
  }
  for (double a : levels) {
    for (double b : levels) {
      mu(0) = a;
      mu(1) = b;
      if (support_violation(prob, mu) > 1e-9) continue;
      best = std::min(best, prob.objective(mu));
    }
  }
  return best;
}

EvidenceProblem unconstrained_problem(const VectorXd& x_tilde, double rho_lo,
                                      double rho_hi, double sigma2) {
  EvidenceProblem prob;
  prob.x_tilde = x_tilde;
  prob.rho_lo = rho_lo;
  prob.rho_hi = rho_hi;
  prob.sigma2 = sigma2;
  return prob;
}

void check_solution_invariants(const EvidenceProblem& prob,
                               const Solution& sol) {
  const int M = prob.dim();
  for (int m = 0; m < M; ++m) {
    CHECK(sol.mu_plus(m) >= -1e-12);
    CHECK(sol.mu_minus(m) >= -1e-12);
    // Complementarity for integral solutions.
    CHECK(std::min(sol.mu_plus(m), sol.mu_minus(m)) <= 1e-7);
    // Band rows of the integral program.
    const double s = sol.mu_plus(m) + sol.mu_minus(m);
    CHECK(prob.rho_lo * sol.u(m) <= s + 1e-7);
    CHECK(s <= prob.rho_hi * sol.u(m) + 1e-7);
  }
  CHECK(sol.bound <= sol.objective + 1e-9);
  CHECK(support_violation(prob, sol.mu()) <= 1e-7);
  // Declared duals are nonnegative weak-duality certificates.
  for (size_t i = 0; i < prob.constraints.size(); ++i) {
    const auto* poly = std::get_if<PolyhedralSet>(&prob.constraints[i].set);
    if (!poly) continue;
    for (int side = 0; side < 2; ++side) {
      const VectorXd& p = sol.duals[2 * i + static_cast<size_t>(side)];
      REQUIRE(p.size() == poly->D.rows());
      CHECK(p.minCoeff() >= -1e-12);
      const VectorXd dir = side == 0 ? sol.mu() : VectorXd(-sol.mu());
      CHECK((poly->D.transpose() * p - dir).lpNorm<Eigen::Infinity>() <=
            1e-5 * (1.0 + dir.norm()));
    }
  }
}

}  // namespace

TEST_CASE("zero residual gives zero evidence and empty support") {
  auto prob = unconstrained_problem(VectorXd::Zero(4), 0.5, 2.0, 1.0);
  const auto sol = solve_bruteforce(prob);
  CHECK(sol.objective == doctest::Approx(0.0));
  CHECK(sol.u.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(v_t_exact(prob) == doctest::Approx(0.0));

  const auto bb = branch_and_bound(prob);
  CHECK(bb.objective == doctest::Approx(0.0));
  CHECK(bb.nodes <= 1);  // root relaxation is already optimal
}

TEST_CASE("two-coordinate worked example") {
  VectorXd x(2);
  x << 1.0, 0.2;
  auto prob = unconstrained_problem(x, 0.5, 2.0, 1.0);
  const auto sol = solve_bruteforce(prob);
  CHECK(sol.objective == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(sol.u(0) == doctest::Approx(1.0));
  CHECK(sol.u(1) == doctest::Approx(0.0));
  CHECK(sol.mu()(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(v_t_exact(prob) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(grid_oracle(prob) == doctest::Approx(-0.5).epsilon(1e-4));
  check_solution_invariants(prob, sol);
}

TEST_CASE("degenerate band rho_lo == rho_hi forces the magnitude") {
  VectorXd x(2);
  x << 1.4, -0.9;
  auto prob = unconstrained_problem(x, 1.0, 1.0, 1.0);
  const auto sol = solve_bruteforce(prob);
  for (int m = 0; m < 2; ++m) {
    const double mag = std::abs(sol.mu()(m));
    if (sol.u(m) > 0.5) CHECK(mag == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(sol.objective == doctest::Approx(grid_oracle(prob)).epsilon(1e-4));
}

TEST_CASE("zero slack with a full-dimensional set pins mu to zero") {
  VectorXd x(2);
  x << 1.0, 1.0;
  auto prob = unconstrained_problem(x, 0.5, 2.0, 1.0);
  VectorXd c(2);
  c << 1.0, 0.0;
  prob.constraints.push_back({0.0, EllipsoidSet(c, 0.2)});
  const auto sol = solve_bruteforce(prob);
  CHECK(sol.objective == doctest::Approx(0.0));
  CHECK(sol.u.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("brute force matches the grid oracle on random 2d instances") {
  for (auto kind : {SetKind::kBox, SetKind::kGeneralPoly, SetKind::kEllipsoid,
                    SetKind::kDNorm}) {
    for (int trial = 0; trial < 8; ++trial) {
      InstanceOptions opt;
      opt.M = 2;
      opt.kind = kind;
      opt.rho_hi_cap = 1.6;
      const auto prob =
          testgen::random_instance(opt, 1000 + 17 * trial +
                                            1000000 * static_cast<int>(kind));
      const auto sol = solve_bruteforce(prob);
      const double oracle = grid_oracle(prob);
      // The grid is a subset of the feasible set: oracle >= optimum, and the
      // 0.005 step bounds the discretization error.
      CHECK(sol.objective <= oracle + 1e-9);
      CHECK(sol.objective >= oracle - 0.05);
      check_solution_invariants(prob, sol);
    }
  }
}

TEST_CASE("branch and bound equals brute force across kinds") {
  for (auto kind : {SetKind::kBox, SetKind::kGeneralPoly, SetKind::kEllipsoid,
                    SetKind::kDNorm}) {
    for (int trial = 0; trial < 15; ++trial) {
      InstanceOptions opt;
      opt.M = 2 + trial % 5;  // 2..6
      if (kind == SetKind::kGeneralPoly) opt.M = std::min(opt.M, 5);
      opt.kind = kind;
      const auto prob = testgen::random_instance(
          opt, 555 + trial + 1000000 * static_cast<int>(kind));
      const auto exact = solve_bruteforce(prob);
      const auto bb = branch_and_bound(prob);
      CHECK(bb.objective ==
            doctest::Approx(exact.objective).epsilon(1e-5).scale(1.0));
      CHECK(bb.status == SolveStatus::kOptimal);
      check_solution_invariants(prob, bb);

      // Box-relaxation node bounds must agree with the default.
      BranchAndBoundConfig box_cfg;
      box_cfg.relaxation = RelaxationKind::kBox;
      const auto bb_box = branch_and_bound(prob, box_cfg);
      CHECK(bb_box.objective ==
            doctest::Approx(exact.objective).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("warm signs seed the incumbent") {
  VectorXd x(3);
  x << 1.0, -1.2, 0.1;
  auto prob = unconstrained_problem(x, 0.5, 2.0, 1.0);
  BranchAndBoundConfig cfg;
  cfg.warm_signs = std::vector<int>{1, -1, 0};
  const auto sol = branch_and_bound(prob, cfg);
  const auto exact = solve_bruteforce(prob);
  CHECK(sol.objective == doctest::Approx(exact.objective).epsilon(1e-6));
}

TEST_CASE("infinite gap returns the root bound only") {
  VectorXd x(3);
  x << 0.8, -0.4, 0.3;
  auto prob = unconstrained_problem(x, 0.5, 2.0, 1.0);
  BranchAndBoundConfig cfg;
  cfg.gap_tol = std::numeric_limits<double>::infinity();
  const auto sol = branch_and_bound(prob, cfg);
  CHECK(sol.status == SolveStatus::kBoundOnly);
  CHECK(sol.bound <= solve_bruteforce(prob).objective + 1e-9);
  CHECK(sol.nodes == 0);
}

TEST_CASE("enumeration cap is enforced") {
  auto prob = unconstrained_problem(VectorXd::Zero(9), 0.5, 2.0, 1.0);
  CHECK_THROWS_AS(solve_bruteforce(prob), TooLargeError);
}

TEST_CASE("evidence bounds and sigma scaling") {
  for (int trial = 0; trial < 20; ++trial) {
    InstanceOptions opt;
    opt.M = 3 + trial % 3;
    opt.kind = static_cast<SetKind>(trial % 4);
    if (opt.kind == SetKind::kGeneralPoly) opt.M = std::min(opt.M, 5);
    auto prob = testgen::random_instance(opt, 90000 + trial);
    const double v = v_t_exact(prob);
    CHECK(v >= 0.0);
    CHECK(v <= prob.evidence_cap() + 1e-9);

    // Scaling sigma2 by c scales v by 1/c with the same optimizer.
    auto scaled = prob;
    scaled.sigma2 *= 3.7;
    const double v_scaled = v_t_exact(scaled);
    CHECK(v_scaled == doctest::Approx(v / 3.7).epsilon(1e-6));
  }
}

TEST_CASE("widening every slack never decreases the evidence") {
  for (int trial = 0; trial < 12; ++trial) {
    InstanceOptions opt;
    opt.M = 4;
    opt.kind = static_cast<SetKind>(trial % 4);
    if (opt.kind == SetKind::kGeneralPoly) opt.M = 4;
    auto prob = testgen::random_instance(opt, 777 + trial);
    const double v_small = v_t_exact(prob);
    auto widened = prob;
    for (auto& c : widened.constraints) c.epsilon *= 2.5;
    const double v_big = v_t_exact(widened);
    CHECK(v_big >= v_small - 1e-8);
  }
}
