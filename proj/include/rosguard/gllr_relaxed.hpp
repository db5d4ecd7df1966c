#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "rosguard/evidence.hpp"

namespace rosguard {

enum class SolveStatus { kOptimal, kBoundOnly, kIterLimit, kInfeasible };

/// Result of any of the evidence solvers. Integral solvers fill u/b with
/// 0/1 values; the continuous relaxations may leave them fractional.
struct Solution {
  Eigen::VectorXd mu_plus, mu_minus;
  Eigen::VectorXd u, b;
  Eigen::VectorXd phi;
  /// Per polyhedral constraint, the dual pair (p for +mu, p for -mu);
  /// empty vectors for ellipsoid/D-norm constraints.
  std::vector<Eigen::VectorXd> duals;
  double objective = 0.0;
  double bound = -std::numeric_limits<double>::infinity();
  SolveStatus status = SolveStatus::kOptimal;
  long nodes = 0;  // branch-and-bound diagnostics

  Eigen::VectorXd mu() const { return mu_plus - mu_minus; }
};

// ---------------------------------------------------------------------------
// Exact continuous relaxations (deterministic, with certified bounds).

enum class RelaxationKind { kPerspectiveSoc, kBox };

struct RelaxationResult {
  double value = 0.0;        // objective at the returned (feasible) point
  double lower_bound = 0.0;  // certified lower bound on the relaxation min
  Eigen::VectorXd mu;
  bool feasible = true;
};

/// Plain interval relaxation of the support/sign structure: quadratic
/// objective over hull intervals intersected with the robust constraints.
RelaxationResult box_relaxation(const EvidenceProblem& prob,
                                const Restriction& r,
                                CutPool* pool = nullptr);

/// Perspective relaxation: per-coordinate convex envelope of the banded
/// quadratic (the SOC program value). Solved separably when no robust
/// constraint binds; otherwise by dual ascent over the generated cuts. The
/// Lagrangian-dual certificate keeps the lower bound valid for any
/// multiplier vector, so early stopping never invalidates pruning.
RelaxationResult soc_relaxation(const EvidenceProblem& prob,
                                const Restriction& r,
                                CutPool* pool = nullptr);

/// Root-node scalar bounds (values of the two relaxed programs).
double box_relaxation_bound(const EvidenceProblem& prob);
double soc_relaxation_bound(const EvidenceProblem& prob);

/// Valid lower bound for a branch-and-bound node under the given relaxation.
RelaxationResult node_relaxation(const EvidenceProblem& prob,
                                 const Restriction& r, RelaxationKind kind,
                                 CutPool* pool = nullptr);

// ---------------------------------------------------------------------------
// The batched first-order Lagrangian solver (unrolled-network realization).

struct LagrangianState;

/// Debug probe called after every primal layer: (outer round, layer, state,
/// loss before / after the primal step at that layer's fixed multipliers).
using LayerObserver = std::function<void(int, int, const LagrangianState&,
                                         double, double)>;

/// Per-layer step schedule; the paper's trainable step sizes appear here as
/// configured geometric decays.
struct SolverSchedule {
  std::vector<double> primal_steps;  // length K
  std::vector<double> dual_steps;    // length K
  int layers = 10;                   // K
  double eps_stop = 0.01;            // relative-change stopping threshold
  int max_outer = 200;
  double kkt_tol = 1e-4;
  bool backtracking = true;  // halve the step until the loss is non-increasing
  double u_floor = 1e-9;     // 0/0 := 0 convention for the perspective ratio
  double diverge_threshold = 1e12;
  LayerObserver observer;    // optional; test instrumentation only

  static SolverSchedule defaults();
};

/// The SOC program data. Bounds are implicit: u, b in [0,1]^M, phi >= 0,
/// mu_plus/mu_minus in [0, rho_hi]; one SOC row per coordinate,
///   ||(mu_m, (phi_m - u_m)/2)|| <= (phi_m + u_m)/2.
struct SocpInstance {
  EvidenceProblem prob;

  int dim() const { return prob.dim(); }
  double objective(const Eigen::VectorXd& phi, const Eigen::VectorXd& mu_plus,
                   const Eigen::VectorXd& mu_minus) const;
};

SocpInstance build_socp(const EvidenceProblem& prob);

struct LagrangianState {
  Eigen::VectorXd mu_plus, mu_minus, u, b, phi;
  Eigen::VectorXd lambda;  // row multipliers, all >= 0
  double loss = 0.0;
};

/// Stacked residuals of the penalty rows g_1..g_6 at the state
/// (negative entries are satisfied constraints). Layout:
/// [g1(M) | g2(2N) | g3(M) | g4(M) | g5(M) | g6(M)].
Eigen::VectorXd penalty_residuals(const SocpInstance& inst,
                                  const LagrangianState& s);

/// Solves a batch of instances sharing the shape of `inst` (dimensions and
/// uncertainty-set kinds). Each batch column is solved by an identical
/// instruction sequence, so duplicated inputs give bitwise-equal outputs;
/// columns fan out across the worker pool (ROSGUARD_THREADS caps it).
std::vector<Solution> solve_lagrangian(const SocpInstance& inst,
                                       const SolverSchedule& sched,
                                       const std::vector<EvidenceProblem>& batch);

/// Evidence from the relaxation optimum, clamped into the provable range
/// [0, ||x_tilde||^2 / (2 sigma2)].
double v_t_relaxed(const EvidenceProblem& prob, const SolverSchedule& sched);

}  // namespace rosguard
