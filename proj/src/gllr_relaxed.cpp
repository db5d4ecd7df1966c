#include "rosguard/gllr_relaxed.hpp"

#include <algorithm>
#include <cmath>

#include "rosguard/errors.hpp"
#include "rosguard/parallel.hpp"
#include "rosguard/qp.hpp"

namespace rosguard {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Per-coordinate convex envelope of the banded quadratic.
//
// On a branch-and-bound node each coordinate contributes
//   cost(t) = max(t^2, linear pieces)   over an interval [lo, hi],
// where the linear pieces close the hull over the excluded magnitudes
// below rho_lo. Fully resolved coordinates have no linear piece.

struct EnvPiece {
  double alpha = 0.0;
  double beta = 0.0;
};

struct EnvCoord {
  double lo = 0.0;
  double hi = 0.0;
  int n_pieces = 0;
  EnvPiece piece[2];
};

EnvCoord envelope_coord(const EvidenceProblem& prob, CoordRestriction c) {
  EnvCoord e;
  const double rl = prob.rho_lo, rh = prob.rho_hi;
  if (c.support == SupportState::kExcluded) {
    e.lo = e.hi = 0.0;
    return e;
  }
  if (c.support == SupportState::kIncluded) {
    switch (c.sign) {
      case SignState::kNonNegative:
        e.lo = rl;
        e.hi = rh;
        return e;
      case SignState::kNonPositive:
        e.lo = -rh;
        e.hi = -rl;
        return e;
      case SignState::kFree:
        // Hull of the two bands; the chord over the gap sits at rho_lo^2.
        e.lo = -rh;
        e.hi = rh;
        e.piece[e.n_pieces++] = {0.0, rl * rl};
        return e;
    }
  }
  switch (c.sign) {
    case SignState::kNonNegative:
      e.lo = 0.0;
      e.hi = rh;
      e.piece[e.n_pieces++] = {rl, 0.0};
      return e;
    case SignState::kNonPositive:
      e.lo = -rh;
      e.hi = 0.0;
      e.piece[e.n_pieces++] = {-rl, 0.0};
      return e;
    case SignState::kFree:
      e.lo = -rh;
      e.hi = rh;
      e.piece[e.n_pieces++] = {rl, 0.0};
      e.piece[e.n_pieces++] = {-rl, 0.0};
      return e;
  }
  return e;
}

double env_cost(const EnvCoord& e, double t) {
  double c = t * t;
  for (int k = 0; k < e.n_pieces; ++k)
    c = std::max(c, e.piece[k].alpha * t + e.piece[k].beta);
  return c;
}

struct ScalarMin {
  double t = 0.0;
  double value = 0.0;
};

// Minimizes env_cost(t) + a t + (q/2)(t - z)^2 over [lo, hi] by evaluating
// every stationary point, piece crossing and endpoint.
ScalarMin env_scalar_min(const EnvCoord& e, double a, double q, double z) {
  double cand[10];
  int nc = 0;
  cand[nc++] = e.lo;
  cand[nc++] = e.hi;
  cand[nc++] = (q * z - a) / (2.0 + q);  // quadratic branch stationary point
  for (int k = 0; k < e.n_pieces; ++k) {
    const double alpha = e.piece[k].alpha, beta = e.piece[k].beta;
    if (q > 0.0) cand[nc++] = (q * z - a - alpha) / q;
    const double disc = alpha * alpha + 4.0 * beta;
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      cand[nc++] = 0.5 * (alpha + root);
      cand[nc++] = 0.5 * (alpha - root);
    }
  }
  if (e.n_pieces == 2 && e.piece[0].alpha != e.piece[1].alpha)
    cand[nc++] = (e.piece[1].beta - e.piece[0].beta) /
                 (e.piece[0].alpha - e.piece[1].alpha);

  ScalarMin best{e.lo, kInf};
  for (int i = 0; i < nc; ++i) {
    const double t = std::clamp(cand[i], e.lo, e.hi);
    const double dt = t - z;
    const double v = env_cost(e, t) + a * t + 0.5 * q * dt * dt;
    if (v < best.value) best = {t, v};
  }
  return best;
}

std::vector<EnvCoord> envelope_coords(const EvidenceProblem& prob,
                                      const Restriction& r) {
  std::vector<EnvCoord> env(r.size());
  for (size_t m = 0; m < r.size(); ++m)
    env[m] = envelope_coord(prob, r[m]);
  return env;
}

}  // namespace

// ---------------------------------------------------------------------------
// Box relaxation: quadratic objective over hull intervals and the robust
// constraints; an exact projection of x_tilde.

RelaxationResult box_relaxation(const EvidenceProblem& prob,
                                const Restriction& r, CutPool* pool) {
  const auto box = hull_intervals(prob, r);
  const auto proj = project_feasible(prob, box, prob.x_tilde, 1e-10, pool);
  RelaxationResult out;
  if (!proj.feasible) {
    out.feasible = false;
    out.value = kInf;
    out.lower_bound = kInf;
    return out;
  }
  out.mu = proj.mu;
  out.value = prob.objective(proj.mu);
  // The projection is exact up to the cut tolerance; retain a small margin
  // so the value stays a valid lower bound for the node subtree.
  out.lower_bound =
      out.value - 1e-9 * (1.0 + std::abs(out.value)) -
      proj.max_violation * prob.rho_hi / prob.sigma2;
  return out;
}

double box_relaxation_bound(const EvidenceProblem& prob) {
  prob.validate();
  return box_relaxation(prob, root_restriction(prob.dim())).value;
}

// ---------------------------------------------------------------------------
// Perspective (SOC) relaxation by ADMM over the envelope objective, with an
// exact Lagrangian-dual certificate evaluated from the accumulated cuts.

RelaxationResult soc_relaxation(const EvidenceProblem& prob,
                                const Restriction& r, CutPool* pool) {
  const int M = prob.dim();
  const auto env = envelope_coords(prob, r);
  const double scale = std::max({1.0, prob.x_tilde.lpNorm<Eigen::Infinity>(),
                                 prob.rho_hi});
  const double denom = 2.0 * prob.sigma2;

  // a_m is the linear objective coefficient: G(mu) = sum c_m(mu_m) + a^T mu.
  VectorXd a = -2.0 * prob.x_tilde;

  RelaxationResult out;

  // Separable fast path: minimize each coordinate in closed form; exact
  // whenever no robust constraint binds there.
  {
    VectorXd mu_sep(M);
    double val = 0.0;
    for (int m = 0; m < M; ++m) {
      const ScalarMin sm = env_scalar_min(env[m], a(m), 0.0, 0.0);
      mu_sep(m) = sm.t;
      val += sm.value;
    }
    if (support_violation(prob, mu_sep) <= 1e-10 * scale) {
      out.mu = mu_sep;
      out.value = val / denom;
      out.lower_bound = out.value - 1e-12 * (1.0 + std::abs(out.value));
      return out;
    }
  }

  CutPool local;
  CutPool& cuts = pool ? *pool : local;

  // The box projection seeds the cut pool, a feasible point (upper value U)
  // and warm multipliers for the dual ascent.
  std::vector<Interval> hull(static_cast<size_t>(M));
  {
    const auto h = hull_intervals(prob, r);
    hull = h;
  }
  const auto proj = project_feasible(prob, hull, prob.x_tilde, 1e-10, &cuts);
  if (!proj.feasible) {
    out.feasible = false;
    out.value = kInf;
    out.lower_bound = kInf;
    return out;
  }
  double upper = a.dot(proj.mu);
  for (int m = 0; m < M; ++m) upper += env_cost(env[m], proj.mu(m));

  // Dual ascent on the cut multipliers. For any lambda >= 0,
  //   q(lambda) = -lambda^T rhs + sum_m min_{t in I_m} [c_m(t) + tilt_m t]
  // is a valid lower bound on the node relaxation; Polyak steps aim at the
  // feasible value `upper`.
  VectorXd lambda = VectorXd::Zero(static_cast<int>(cuts.normals.size()));
  for (int k = 0; k < proj.cut_multipliers.size() && k < lambda.size(); ++k)
    lambda(k) = 2.0 * std::max(0.0, proj.cut_multipliers(k));

  double best_q = -kInf;
  VectorXd best_mu = proj.mu;

  for (int round = 0; round < 4; ++round) {
    const int K = static_cast<int>(cuts.normals.size());
    lambda.conservativeResize(K);
    for (int k = 0; k < K; ++k)
      if (!std::isfinite(lambda(k)) || lambda(k) < 0.0) lambda(k) = 0.0;

    VectorXd mu_star(M);
    for (int it = 0; it < 400; ++it) {
      VectorXd tilt = a;
      double q = 0.0;
      for (int k = 0; k < K; ++k) {
        tilt += lambda(k) * cuts.normals[static_cast<size_t>(k)];
        q -= lambda(k) * cuts.rhs[static_cast<size_t>(k)];
      }
      for (int m = 0; m < M; ++m) {
        const ScalarMin sm = env_scalar_min(env[m], tilt(m), 0.0, 0.0);
        mu_star(m) = sm.t;
        q += sm.value;
      }
      if (q > best_q) {
        best_q = q;
        best_mu = mu_star;
      }
      const double gap = upper - q;
      if (gap <= 1e-9 * (1.0 + std::abs(upper))) break;

      VectorXd g(K);
      double gnorm2 = 0.0;
      for (int k = 0; k < K; ++k) {
        g(k) = cuts.normals[static_cast<size_t>(k)].dot(mu_star) -
               cuts.rhs[static_cast<size_t>(k)];
        if (lambda(k) <= 0.0 && g(k) < 0.0) g(k) = 0.0;
        gnorm2 += g(k) * g(k);
      }
      if (gnorm2 <= 1e-24) break;
      const double step = 0.8 * gap / (gnorm2 * (1.0 + it / 40.0));
      for (int k = 0; k < K; ++k)
        lambda(k) = std::max(0.0, lambda(k) + step * g(k));
    }

    // Deepen the outer approximation where the dual argmin escapes it.
    bool added = false;
    for (const auto& c : prob.constraints) {
      for (double sgn : {1.0, -1.0}) {
        const VectorXd dir = sgn * best_mu;
        if (absolute_support(c.set, dir) - c.epsilon > 1e-8 * scale)
          added |= cuts.add(sgn * support_argmax(c.set, dir), c.epsilon);
      }
    }
    if (!added) break;
  }

  out.mu = best_mu;
  out.value = upper / denom;
  out.lower_bound = best_q / denom;
  out.feasible = true;
  return out;
}

double soc_relaxation_bound(const EvidenceProblem& prob) {
  prob.validate();
  return node_relaxation(prob, root_restriction(prob.dim()),
                         RelaxationKind::kPerspectiveSoc)
      .lower_bound;
}

RelaxationResult node_relaxation(const EvidenceProblem& prob,
                                 const Restriction& r, RelaxationKind kind,
                                 CutPool* pool) {
  RelaxationResult box = box_relaxation(prob, r, pool);
  if (kind == RelaxationKind::kBox || !box.feasible) return box;
  RelaxationResult soc = soc_relaxation(prob, r, pool);
  if (!soc.feasible) return soc;
  // Both are valid lower bounds for the node; keep the stronger one.
  soc.lower_bound = std::max(soc.lower_bound, box.lower_bound);
  soc.value = std::max(soc.value, soc.lower_bound);
  return soc;
}

// ---------------------------------------------------------------------------
// SOC program container.

SocpInstance build_socp(const EvidenceProblem& prob) {
  prob.validate();
  return SocpInstance{prob};
}

double SocpInstance::objective(const VectorXd& phi, const VectorXd& mu_plus,
                               const VectorXd& mu_minus) const {
  return (phi.sum() - 2.0 * (mu_plus - mu_minus).dot(prob.x_tilde)) /
         (2.0 * prob.sigma2);
}

SolverSchedule SolverSchedule::defaults() {
  SolverSchedule s;
  s.primal_steps.resize(s.layers);
  s.dual_steps.resize(s.layers);
  for (int k = 0; k < s.layers; ++k) {
    s.primal_steps[k] = 0.05 * std::pow(0.9, k);
    s.dual_steps[k] = 0.1 * std::pow(0.95, k);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Batched first-order Lagrangian solver.

namespace {

struct RowLayout {
  int M = 0, N = 0;
  int g1 = 0, g2 = 0, g3 = 0, g4 = 0, g5 = 0, g6 = 0, total = 0;

  explicit RowLayout(int M_, int N_) : M(M_), N(N_) {
    g1 = 0;
    g2 = g1 + M;
    g3 = g2 + 2 * N;
    g4 = g3 + M;
    g5 = g4 + M;
    g6 = g5 + M;
    total = g6 + M;
  }
};

VectorXd residual_rows(const SocpInstance& inst, const LagrangianState& s) {
  const EvidenceProblem& prob = inst.prob;
  const int M = prob.dim();
  const int N = static_cast<int>(prob.constraints.size());
  const RowLayout L(M, N);
  VectorXd g(L.total);
  const VectorXd mu = s.mu_plus - s.mu_minus;
  for (int m = 0; m < M; ++m) {
    const double half_diff = 0.5 * (s.phi(m) - s.u(m));
    const double radius = std::hypot(mu(m), half_diff);
    g(L.g1 + m) = radius - 0.5 * (s.phi(m) + s.u(m));
    g(L.g3 + m) = prob.rho_lo * s.u(m) - s.mu_plus(m) - s.mu_minus(m);
    g(L.g4 + m) = s.mu_plus(m) + s.mu_minus(m) - prob.rho_hi * s.u(m);
    g(L.g5 + m) = s.mu_plus(m) + prob.rho_hi * s.b(m) - prob.rho_hi;
    g(L.g6 + m) = s.mu_minus(m) - prob.rho_hi * s.b(m);
  }
  for (int i = 0; i < N; ++i) {
    const auto& c = prob.constraints[static_cast<size_t>(i)];
    g(L.g2 + 2 * i) = absolute_support(c.set, mu) - c.epsilon;
    g(L.g2 + 2 * i + 1) = absolute_support(c.set, -mu) - c.epsilon;
  }
  return g;
}

struct Gradients {
  VectorXd mu_plus, mu_minus, u, b, phi;
};

double lagrangian_loss(const SocpInstance& inst, const LagrangianState& s,
                       const VectorXd& lambda) {
  return inst.objective(s.phi, s.mu_plus, s.mu_minus) +
         lambda.dot(residual_rows(inst, s));
}

Gradients lagrangian_gradients(const SocpInstance& inst,
                               const LagrangianState& s,
                               const VectorXd& lambda) {
  const EvidenceProblem& prob = inst.prob;
  const int M = prob.dim();
  const int N = static_cast<int>(prob.constraints.size());
  const RowLayout L(M, N);
  const double inv = 1.0 / prob.sigma2;
  const VectorXd mu = s.mu_plus - s.mu_minus;

  Gradients grad;
  grad.mu_plus = VectorXd::Constant(M, 0.0);
  grad.mu_minus = VectorXd::Constant(M, 0.0);
  grad.u = VectorXd::Zero(M);
  grad.b = VectorXd::Zero(M);
  grad.phi = VectorXd::Constant(M, 0.5 * inv);

  for (int m = 0; m < M; ++m) {
    grad.mu_plus(m) += -prob.x_tilde(m) * inv;
    grad.mu_minus(m) += prob.x_tilde(m) * inv;

    const double half_diff = 0.5 * (s.phi(m) - s.u(m));
    const double radius = std::max(std::hypot(mu(m), half_diff), 1e-12);
    const double l1 = lambda(L.g1 + m);
    grad.mu_plus(m) += l1 * mu(m) / radius;
    grad.mu_minus(m) -= l1 * mu(m) / radius;
    grad.phi(m) += l1 * (half_diff / (2.0 * radius) - 0.5);
    grad.u(m) += l1 * (-half_diff / (2.0 * radius) - 0.5);

    const double l3 = lambda(L.g3 + m), l4 = lambda(L.g4 + m);
    grad.mu_plus(m) += -l3 + l4;
    grad.mu_minus(m) += -l3 + l4;
    grad.u(m) += l3 * prob.rho_lo - l4 * prob.rho_hi;

    const double l5 = lambda(L.g5 + m), l6 = lambda(L.g6 + m);
    grad.mu_plus(m) += l5;
    grad.mu_minus(m) += l6;
    grad.b(m) += l5 * prob.rho_hi - l6 * prob.rho_hi;
  }
  for (int i = 0; i < N; ++i) {
    const auto& c = prob.constraints[static_cast<size_t>(i)];
    const double lp = lambda(L.g2 + 2 * i);
    const double lm = lambda(L.g2 + 2 * i + 1);
    if (lp > 0.0) {
      const VectorXd h = support_argmax(c.set, mu);
      grad.mu_plus += lp * h;
      grad.mu_minus -= lp * h;
    }
    if (lm > 0.0) {
      const VectorXd h = support_argmax(c.set, -mu);
      grad.mu_plus -= lm * h;
      grad.mu_minus += lm * h;
    }
  }
  return grad;
}

// Box projection plus the complementary wedge on (mu+, mu-): the SOC data
// is the sign split of mu, so at most one side of a pair may be active.
void project_state(const EvidenceProblem& prob, LagrangianState& s) {
  const int M = prob.dim();
  for (int m = 0; m < M; ++m) {
    s.mu_plus(m) = std::clamp(s.mu_plus(m), 0.0, prob.rho_hi);
    s.mu_minus(m) = std::clamp(s.mu_minus(m), 0.0, prob.rho_hi);
    if (s.mu_plus(m) > 0.0 && s.mu_minus(m) > 0.0) {
      if (s.mu_plus(m) >= s.mu_minus(m))
        s.mu_minus(m) = 0.0;
      else
        s.mu_plus(m) = 0.0;
    }
    s.u(m) = std::clamp(s.u(m), 0.0, 1.0);
    s.b(m) = std::clamp(s.b(m), 0.0, 1.0);
    s.phi(m) = std::max(s.phi(m), 0.0);
  }
}

double relative_change(const LagrangianState& a, const LagrangianState& b) {
  auto rel = [](const VectorXd& x, const VectorXd& y) {
    return (x - y).lpNorm<Eigen::Infinity>() /
           (1.0 + y.lpNorm<Eigen::Infinity>());
  };
  double r = rel(a.mu_plus, b.mu_plus);
  r = std::max(r, rel(a.mu_minus, b.mu_minus));
  r = std::max(r, rel(a.u, b.u));
  r = std::max(r, rel(a.b, b.b));
  r = std::max(r, rel(a.phi, b.phi));
  return r;
}

double kkt_residual(const SocpInstance& inst, const LagrangianState& s,
                    const VectorXd& lambda) {
  const VectorXd g = residual_rows(inst, s);
  double r = 0.0;
  for (int j = 0; j < g.size(); ++j) {
    r = std::max(r, g(j));                       // feasibility
    r = std::max(r, std::abs(lambda(j) * g(j)));  // complementarity
  }
  // Projected-gradient stationarity with a unit probe step.
  const Gradients grad = lagrangian_gradients(inst, s, lambda);
  LagrangianState probe = s;
  const double step = 1e-3;
  probe.mu_plus -= step * grad.mu_plus;
  probe.mu_minus -= step * grad.mu_minus;
  probe.u -= step * grad.u;
  probe.b -= step * grad.b;
  probe.phi -= step * grad.phi;
  project_state(inst.prob, probe);
  r = std::max(r, relative_change(probe, s) / step);
  return r;
}

Solution solve_one(const SocpInstance& shape, const SolverSchedule& sched,
                   const EvidenceProblem& prob) {
  SocpInstance inst{prob};
  const int M = prob.dim();
  const int N = static_cast<int>(prob.constraints.size());
  const RowLayout L(M, N);

  LagrangianState s;
  s.mu_plus = VectorXd::Zero(M);
  s.mu_minus = VectorXd::Zero(M);
  s.u = VectorXd::Constant(M, 0.5);
  s.b = VectorXd::Constant(M, 0.5);
  s.phi = VectorXd::Zero(M);
  s.lambda = VectorXd::Zero(L.total);
  (void)shape;

  const int K = sched.layers;
  for (int outer = 0; outer < sched.max_outer; ++outer) {
    const LagrangianState snapshot = s;
    for (int k = 0; k < K; ++k) {
      const Gradients grad = lagrangian_gradients(inst, s, s.lambda);
      double step = sched.primal_steps[static_cast<size_t>(k)];
      const double loss_before = lagrangian_loss(inst, s, s.lambda);
      LagrangianState cand = s;
      for (int halving = 0;; ++halving) {
        cand.mu_plus = s.mu_plus - step * grad.mu_plus;
        cand.mu_minus = s.mu_minus - step * grad.mu_minus;
        cand.u = s.u - step * grad.u;
        cand.b = s.b - step * grad.b;
        cand.phi = s.phi - step * grad.phi;
        project_state(prob, cand);
        if (!sched.backtracking) break;
        if (lagrangian_loss(inst, cand, s.lambda) <= loss_before + 1e-14)
          break;
        if (halving >= 20) {
          cand = s;  // no productive step at this layer
          break;
        }
        step *= 0.5;
      }
      const double loss_after_primal = lagrangian_loss(inst, cand, s.lambda);
      s.mu_plus = cand.mu_plus;
      s.mu_minus = cand.mu_minus;
      s.u = cand.u;
      s.b = cand.b;
      s.phi = cand.phi;
      if (sched.observer)
        sched.observer(outer, k, s, loss_before, loss_after_primal);

      const VectorXd g = residual_rows(inst, s);
      const double rate = sched.dual_steps[static_cast<size_t>(k)];
      s.lambda = (s.lambda + rate * g).cwiseMax(0.0);

      s.loss = lagrangian_loss(inst, s, s.lambda);
      if (!std::isfinite(s.loss) || s.loss > sched.diverge_threshold)
        throw DivergedError("solve_lagrangian: loss diverged");
    }
    if (relative_change(s, snapshot) < sched.eps_stop) break;
  }

  // Repair the epigraph variables onto the cone before reporting.
  for (int m = 0; m < M; ++m) {
    const double mu_m = s.mu_plus(m) - s.mu_minus(m);
    const double ratio = mu_m * mu_m / std::max(s.u(m), sched.u_floor);
    s.phi(m) = std::max(s.phi(m), ratio);
  }

  Solution sol;
  sol.mu_plus = s.mu_plus;
  sol.mu_minus = s.mu_minus;
  sol.u = s.u;
  sol.b = s.b;
  sol.phi = s.phi;
  sol.objective = inst.objective(s.phi, s.mu_plus, s.mu_minus);
  sol.status = kkt_residual(inst, s, s.lambda) < sched.kkt_tol
                   ? SolveStatus::kOptimal
                   : SolveStatus::kIterLimit;
  return sol;
}

}  // namespace

VectorXd penalty_residuals(const SocpInstance& inst, const LagrangianState& s) {
  return residual_rows(inst, s);
}

std::vector<Solution> solve_lagrangian(const SocpInstance& inst,
                                       const SolverSchedule& sched,
                                       const std::vector<EvidenceProblem>& batch) {
  if (sched.primal_steps.size() != static_cast<size_t>(sched.layers) ||
      sched.dual_steps.size() != static_cast<size_t>(sched.layers))
    throw DimMismatchError("solve_lagrangian: schedule length != layers");
  for (const auto& prob : batch) {
    if (prob.dim() != inst.dim() ||
        prob.constraints.size() != inst.prob.constraints.size())
      throw DimMismatchError("solve_lagrangian: batch shape mismatch");
  }
  std::vector<Solution> out(batch.size());
  parallel_for(static_cast<int>(batch.size()), [&](int i) {
    out[static_cast<size_t>(i)] =
        solve_one(inst, sched, batch[static_cast<size_t>(i)]);
  });
  return out;
}

double v_t_relaxed(const EvidenceProblem& prob, const SolverSchedule& sched) {
  prob.validate();
  const SocpInstance inst = build_socp(prob);
  const auto sols = solve_lagrangian(inst, sched, {prob});
  // The SOC optimum provably lies in [-cap, 0]; clamp solver noise into the
  // corresponding evidence range.
  return std::clamp(-sols[0].objective, 0.0, prob.evidence_cap());
}

}  // namespace rosguard
