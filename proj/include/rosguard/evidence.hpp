#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "rosguard/model.hpp"
#include "rosguard/uncertainty.hpp"

namespace rosguard {

/// One robust orthogonality constraint: |h^T mu| <= epsilon for every h in
/// the column uncertainty set (the two-sided form; the one-sided dual block
/// alone would leave -h^T mu unbounded).
struct RobustConstraint {
  double epsilon = 0.0;
  UncertaintySet set;

  const Eigen::VectorXd& nominal_column() const { return nominal(set); }
};

/// One time step's robust evidence optimization instance. The objective is
///   f(mu) = (||mu||^2 - 2 mu^T x_tilde) / (2 sigma2),
/// minimized over the support/sign structure of Eq-12 style variables.
struct EvidenceProblem {
  Eigen::VectorXd x_tilde;
  double rho_lo = 0.0;  // 0 < rho_lo <= rho_hi
  double rho_hi = 0.0;
  double sigma2 = 1.0;
  std::vector<RobustConstraint> constraints;

  int dim() const { return static_cast<int>(x_tilde.size()); }
  double objective(const Eigen::VectorXd& mu) const;
  /// ||x_tilde||^2 / (2 sigma2); the evidence never exceeds this.
  double evidence_cap() const;

  void validate() const;  // throws on malformed data
};

/// Configuration for assembling an EvidenceProblem from a model.
struct EvidenceConfig {
  double rho_lo = 0.5;
  double rho_hi = 2.0;
  /// Explicit per-column slacks; when absent each epsilon_i is auto-filled
  /// from epsilon_guideline(set_i, rho_hi, M).
  std::optional<std::vector<double>> epsilon;
  std::optional<double> sigma2;  // overrides model.sigma2
};

EvidenceProblem build_problem(const SystemModel& model, const Projector& proj,
                              const std::vector<UncertaintySet>& sets,
                              const Eigen::VectorXd& x,
                              const EvidenceConfig& cfg);

/// Convenience overload that computes the projector internally.
EvidenceProblem build_problem(const SystemModel& model,
                              const std::vector<UncertaintySet>& sets,
                              const Eigen::VectorXd& x,
                              const EvidenceConfig& cfg);

// ---------------------------------------------------------------------------
// Support/sign restrictions (branch-and-bound node state).

enum class SupportState : std::int8_t { kFree, kExcluded, kIncluded };
enum class SignState : std::int8_t { kFree, kNonNegative, kNonPositive };

struct CoordRestriction {
  SupportState support = SupportState::kFree;
  SignState sign = SignState::kFree;
};

/// Per-coordinate restriction; an empty vector means the root (all free).
using Restriction = std::vector<CoordRestriction>;

Restriction root_restriction(int dim);
bool is_leaf(const Restriction& r);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Convex hulls in mu-space of the restriction (ignoring the magnitude
/// lower band; used by the box-style relaxation and as cut containers).
std::vector<Interval> hull_intervals(const EvidenceProblem& prob,
                                     const Restriction& r);

/// Exact leaf intervals; requires is_leaf(r).
std::vector<Interval> leaf_intervals(const EvidenceProblem& prob,
                                     const Restriction& r);

// ---------------------------------------------------------------------------
// Exact projection onto {intervals} ∩ {|h^T mu| <= eps_i for all h in S_i}.

struct FeasibleProjection {
  Eigen::VectorXd mu;
  bool feasible = false;
  double max_violation = 0.0;  // residual support violation at mu
  int cut_rounds = 0;
  // Accumulated support cuts a^T mu <= rhs with their multipliers.
  Eigen::MatrixXd cut_normals;
  Eigen::VectorXd cut_rhs;
  Eigen::VectorXd cut_multipliers;
};

/// Reusable pool of supporting hyperplanes a^T mu <= rhs of the robust
/// constraints. Cuts are global facts about the feasible set, so a pool can
/// be shared across every sub-problem of one instance.
struct CutPool {
  std::vector<Eigen::VectorXd> normals;
  std::vector<double> rhs;

  /// Returns true when the cut is new (not a near-duplicate).
  bool add(const Eigen::VectorXd& normal, double r);
};

/// Minimizes ||mu - y||^2 over the intersection. Supporting hyperplanes of
/// the robust constraints are generated on demand; for polyhedral and D-norm
/// sets the cut pool is finite so termination is exact, for ellipsoids the
/// violation decays geometrically and iteration stops at `tol`. A caller-owned
/// pool carries discovered cuts across related solves.
FeasibleProjection project_feasible(const EvidenceProblem& prob,
                                    const std::vector<Interval>& box,
                                    const Eigen::VectorXd& y,
                                    double tol = 1e-10,
                                    CutPool* pool = nullptr);

/// Largest violation of the two-sided robust constraints at mu.
double support_violation(const EvidenceProblem& prob,
                         const Eigen::VectorXd& mu);

/// Independent checker used by tests and the solvers' postconditions:
/// verifies band membership for the declared signs plus robust feasibility.
bool check_feasible(const EvidenceProblem& prob, const Restriction& r,
                    const Eigen::VectorXd& mu, double feas_tol = 1e-7);

}  // namespace rosguard
