#pragma once

#include <optional>
#include <vector>

#include "rosguard/evidence.hpp"
#include "rosguard/gllr_relaxed.hpp"

namespace rosguard {

/// Exhaustive exact solver: enumerates every support/sign pattern and solves
/// the convex continuous piece exactly. Restricted to dim <= 8.
struct BruteForceConfig {
  int max_dim = 8;
};

Solution solve_bruteforce(const EvidenceProblem& prob,
                          const BruteForceConfig& cfg = {});

struct BranchAndBoundConfig {
  /// Absolute optimality gap; < 0 selects the default 1e-6 * (1 + |incumbent|).
  double gap_tol = -1.0;
  long node_budget = 100000;
  RelaxationKind relaxation = RelaxationKind::kPerspectiveSoc;
  /// Optional warm incumbent: previous step's signs (per coordinate,
  /// -1 / 0 / +1).
  std::optional<std::vector<int>> warm_signs;
};

/// Best-bound-first branch and bound over support membership and signs,
/// bounded by the continuous relaxation. Serial and deterministic.
Solution branch_and_bound(const EvidenceProblem& prob,
                          const BranchAndBoundConfig& cfg = {});

struct ExactEvidenceConfig {
  enum class Engine { kBranchAndBound, kBruteForce };
  Engine engine = Engine::kBranchAndBound;
  BranchAndBoundConfig bnb;
  BruteForceConfig brute;
};

/// v_t = -(minimum objective); always in [0, ||x_tilde||^2 / (2 sigma2)].
double v_t_exact(const EvidenceProblem& prob,
                 const ExactEvidenceConfig& cfg = {});

}  // namespace rosguard
