#include "rosguard/gllr_exact.hpp"

#include <cassert>
#include <cmath>
#include <queue>

#include "rosguard/errors.hpp"
#include "rosguard/qp.hpp"

namespace rosguard {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LeafSolve {
  bool feasible = false;
  double value = kInf;
  VectorXd mu;
};

LeafSolve solve_leaf(const EvidenceProblem& prob, const Restriction& r,
                     CutPool* pool) {
  LeafSolve out;
  const auto box = leaf_intervals(prob, r);
  const auto proj = project_feasible(prob, box, prob.x_tilde, 1e-10, pool);
  if (!proj.feasible) return out;
  out.feasible = true;
  out.mu = proj.mu;
  out.value = prob.objective(proj.mu);
  return out;
}

Restriction signs_to_restriction(const std::vector<int>& signs) {
  Restriction r(signs.size());
  for (size_t m = 0; m < signs.size(); ++m) {
    if (signs[m] == 0) {
      r[m].support = SupportState::kExcluded;
    } else {
      r[m].support = SupportState::kIncluded;
      r[m].sign = signs[m] > 0 ? SignState::kNonNegative
                               : SignState::kNonPositive;
    }
  }
  return r;
}

// Fills the Eq-12 style variable blocks of a Solution from the optimal mu.
void fill_solution_from_mu(const EvidenceProblem& prob, const VectorXd& mu,
                           Solution& sol) {
  const int M = prob.dim();
  sol.mu_plus = mu.cwiseMax(0.0);
  sol.mu_minus = (-mu).cwiseMax(0.0);
  sol.u.resize(M);
  sol.b.resize(M);
  sol.phi.resize(M);
  for (int m = 0; m < M; ++m) {
    const bool active = std::abs(mu(m)) > 0.5 * prob.rho_lo;
    sol.u(m) = active ? 1.0 : 0.0;
    sol.b(m) = mu(m) < 0.0 ? 1.0 : 0.0;
    sol.phi(m) = active ? mu(m) * mu(m) : 0.0;
  }
  sol.duals.clear();
  for (const auto& c : prob.constraints) {
    const auto* poly = std::get_if<PolyhedralSet>(&c.set);
    if (!poly) {
      sol.duals.emplace_back();
      sol.duals.emplace_back();
      continue;
    }
    for (double sgn : {1.0, -1.0}) {
      const VectorXd dir = sgn * mu;
      // An optimal dual of max{h^T dir : D h <= d} is supported on the rows
      // active at the maximizing vertex.
      const VectorXd h = support_argmax(c.set, dir);
      const double scale = std::max(1.0, poly->d.cwiseAbs().maxCoeff());
      std::vector<int> active;
      for (int row = 0; row < poly->D.rows(); ++row)
        if (poly->D.row(row).dot(h) >= poly->d(row) - 1e-7 * scale)
          active.push_back(row);
      VectorXd p = VectorXd::Zero(poly->D.rows());
      if (!active.empty()) {
        MatrixXd At(dir.size(), static_cast<int>(active.size()));
        for (size_t k = 0; k < active.size(); ++k)
          At.col(static_cast<int>(k)) = poly->D.row(active[k]).transpose();
        const auto nn = nnls(At, dir);
        if (nn.residual.lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + dir.norm()))
          for (size_t k = 0; k < active.size(); ++k)
            p(active[k]) = nn.u(static_cast<int>(k));
      }
      sol.duals.push_back(std::move(p));
    }
  }
}

}  // namespace

Solution solve_bruteforce(const EvidenceProblem& prob,
                          const BruteForceConfig& cfg) {
  prob.validate();
  const int M = prob.dim();
  if (M > cfg.max_dim)
    throw TooLargeError("solve_bruteforce: dimension exceeds enumeration cap");

  std::vector<int> signs(static_cast<size_t>(M), 0);
  std::vector<int> best_signs = signs;
  double best = kInf;
  VectorXd best_mu = VectorXd::Zero(M);
  bool any_feasible = false;

  // Ternary counter over {0, +, -} per coordinate; the cut pool carries
  // discovered support facets across the enumeration.
  CutPool pool;
  while (true) {
    const Restriction r = signs_to_restriction(signs);
    const LeafSolve leaf = solve_leaf(prob, r, &pool);
    if (leaf.feasible && leaf.value < best) {
      best = leaf.value;
      best_mu = leaf.mu;
      best_signs = signs;
      any_feasible = true;
    }
    int m = 0;
    for (; m < M; ++m) {
      signs[static_cast<size_t>(m)] =
          (signs[static_cast<size_t>(m)] + 2) % 3 - 1;  // 0 -> +1 -> -1 -> 0
      if (signs[static_cast<size_t>(m)] != 0) break;
    }
    if (m == M) break;
  }
  // The empty support (mu = 0) is always feasible.
  assert(any_feasible);
  (void)any_feasible;

  Solution sol;
  fill_solution_from_mu(prob, best_mu, sol);
  sol.objective = best;
  sol.bound = best - 1e-9 * (1.0 + std::abs(best));
  sol.status = SolveStatus::kOptimal;
  sol.nodes = 0;
  return sol;
}

namespace {

struct BnbNode {
  Restriction r;
  double bound = -kInf;
  VectorXd relaxed_mu;
  long id = 0;
};

struct NodeOrder {
  bool operator()(const BnbNode& a, const BnbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.id > b.id;
  }
};

// Branch coordinate per the most-fractional-support rule: implied
// u* = clamp(|mu*|/rho_lo, 0, 1); ties broken toward large |x_tilde|.
// Sign splits are branched only when every support variable is integral.
int pick_branch_coordinate(const EvidenceProblem& prob, const Restriction& r,
                           const VectorXd& mu) {
  const double frac_tol = 1e-7;
  int best_u = -1, best_b = -1, fallback = -1;
  double best_u_score = frac_tol, best_b_score = frac_tol;
  for (int m = 0; m < prob.dim(); ++m) {
    const auto& c = r[static_cast<size_t>(m)];
    const bool u_free = c.support == SupportState::kFree;
    const bool b_free = c.support != SupportState::kExcluded &&
                        c.sign == SignState::kFree;
    if (!u_free && !b_free) continue;
    if (fallback < 0 ||
        std::abs(prob.x_tilde(m)) > std::abs(prob.x_tilde(fallback)))
      fallback = m;
    const double mag = std::abs(mu(m));
    if (u_free) {
      const double u_star = std::min(1.0, mag / prob.rho_lo);
      const double score = std::min(u_star, 1.0 - u_star);
      if (score > best_u_score ||
          (score > frac_tol && best_u >= 0 &&
           score == best_u_score &&
           std::abs(prob.x_tilde(m)) > std::abs(prob.x_tilde(best_u)))) {
        best_u = m;
        best_u_score = score;
      }
    } else if (b_free) {
      // Included coordinate with undecided sign: ambiguous while |mu| sits
      // below the band floor.
      const double score = std::max(0.0, 1.0 - mag / prob.rho_lo);
      if (score > best_b_score ||
          (score > frac_tol && best_b >= 0 &&
           score == best_b_score &&
           std::abs(prob.x_tilde(m)) > std::abs(prob.x_tilde(best_b)))) {
        best_b = m;
        best_b_score = score;
      }
    }
  }
  if (best_u >= 0) return best_u;
  if (best_b >= 0) return best_b;
  return fallback;
}

}  // namespace

Solution branch_and_bound(const EvidenceProblem& prob,
                          const BranchAndBoundConfig& cfg) {
  prob.validate();
  const int M = prob.dim();

  double incumbent = kInf;
  VectorXd incumbent_mu = VectorXd::Zero(M);
  CutPool pool;

  auto try_leaf = [&](const Restriction& r) {
    const LeafSolve leaf = solve_leaf(prob, r, &pool);
    if (leaf.feasible && leaf.value < incumbent) {
      incumbent = leaf.value;
      incumbent_mu = leaf.mu;
    }
  };

  // mu = 0 is always feasible; the previous support, when given, seeds a
  // warmer incumbent.
  try_leaf(signs_to_restriction(std::vector<int>(static_cast<size_t>(M), 0)));
  if (cfg.warm_signs && static_cast<int>(cfg.warm_signs->size()) == M)
    try_leaf(signs_to_restriction(*cfg.warm_signs));

  auto gap_for = [&](double inc) {
    return cfg.gap_tol >= 0.0 ? cfg.gap_tol
                              : 1e-6 * (1.0 + std::abs(inc));
  };

  long next_id = 0;
  long expanded = 0;
  std::priority_queue<BnbNode, std::vector<BnbNode>, NodeOrder> open;

  // The cheap box projection prunes most children; the perspective bound is
  // evaluated only when the box bound alone cannot close the node.
  auto bound_child = [&](Restriction child) -> std::optional<BnbNode> {
    const auto box = box_relaxation(prob, child, &pool);
    if (!box.feasible) return std::nullopt;
    double bound = box.lower_bound;
    VectorXd mu = box.mu;
    if (cfg.relaxation == RelaxationKind::kPerspectiveSoc &&
        bound < incumbent - gap_for(incumbent)) {
      const auto soc = soc_relaxation(prob, child, &pool);
      if (!soc.feasible) return std::nullopt;
      if (soc.lower_bound > bound) {
        bound = soc.lower_bound;
        mu = soc.mu;
      }
    }
    if (bound >= incumbent - gap_for(incumbent)) return std::nullopt;
    BnbNode node;
    node.r = std::move(child);
    node.bound = bound;
    node.relaxed_mu = std::move(mu);
    node.id = next_id++;
    return node;
  };

  {
    const auto relax =
        node_relaxation(prob, root_restriction(M), cfg.relaxation, &pool);
    if (relax.feasible) {
      BnbNode root;
      root.r = root_restriction(M);
      root.bound = relax.lower_bound;
      root.relaxed_mu = relax.mu;
      root.id = next_id++;
      open.push(root);
    }
  }

  const bool bound_only = std::isinf(cfg.gap_tol) && cfg.gap_tol > 0;
  double global_bound = open.empty() ? incumbent : open.top().bound;
  bool budget_hit = false;

  while (!open.empty()) {
    const BnbNode node = open.top();
    global_bound = std::min(node.bound, incumbent);
    if (bound_only) break;
    if (node.bound >= incumbent - gap_for(incumbent)) break;
    open.pop();

    if (expanded++ >= cfg.node_budget) {
      budget_hit = true;
      break;
    }

    const int m = pick_branch_coordinate(prob, node.r, node.relaxed_mu);
    if (m < 0) continue;  // fully resolved; leaf value already folded in

    std::vector<Restriction> children;
    const auto& cm = node.r[static_cast<size_t>(m)];
    if (cm.support == SupportState::kFree) {
      Restriction excl = node.r;
      excl[static_cast<size_t>(m)].support = SupportState::kExcluded;
      Restriction incl = node.r;
      incl[static_cast<size_t>(m)].support = SupportState::kIncluded;
      children = {std::move(excl), std::move(incl)};
    } else {
      Restriction pos = node.r;
      pos[static_cast<size_t>(m)].sign = SignState::kNonNegative;
      Restriction neg = node.r;
      neg[static_cast<size_t>(m)].sign = SignState::kNonPositive;
      children = {std::move(pos), std::move(neg)};
    }

    for (auto& child : children) {
      if (is_leaf(child)) {
        try_leaf(child);
        continue;
      }
      if (auto c = bound_child(std::move(child))) open.push(std::move(*c));
    }
  }

  if (open.empty()) global_bound = incumbent;

  Solution sol;
  fill_solution_from_mu(prob, incumbent_mu, sol);
  sol.objective = incumbent;
  sol.bound = std::min(global_bound, incumbent);
  sol.nodes = expanded;
  if (bound_only)
    sol.status = SolveStatus::kBoundOnly;
  else if (budget_hit)
    sol.status = SolveStatus::kIterLimit;
  else
    sol.status = SolveStatus::kOptimal;
  return sol;
}

double v_t_exact(const EvidenceProblem& prob, const ExactEvidenceConfig& cfg) {
  const Solution sol =
      cfg.engine == ExactEvidenceConfig::Engine::kBruteForce
          ? solve_bruteforce(prob, cfg.brute)
          : branch_and_bound(prob, cfg.bnb);
  double v = -sol.objective;
  // Theory pins v_t to [0, cap]; anything beyond is solver noise.
  assert(v >= -1e-9);
  assert(v <= prob.evidence_cap() + 1e-9);
  return std::clamp(v, 0.0, prob.evidence_cap());
}

}  // namespace rosguard
