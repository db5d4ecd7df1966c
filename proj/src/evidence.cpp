#include "rosguard/evidence.hpp"

#include "rosguard/errors.hpp"
#include "rosguard/qp.hpp"

namespace rosguard {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double EvidenceProblem::objective(const VectorXd& mu) const {
  return (mu.squaredNorm() - 2.0 * mu.dot(x_tilde)) / (2.0 * sigma2);
}

double EvidenceProblem::evidence_cap() const {
  return x_tilde.squaredNorm() / (2.0 * sigma2);
}

void EvidenceProblem::validate() const {
  if (!(rho_lo > 0.0))
    throw DimMismatchError("EvidenceProblem: rho_lo must be > 0");
  if (!(rho_hi >= rho_lo))
    throw DimMismatchError("EvidenceProblem: need rho_lo <= rho_hi");
  if (!(sigma2 > 0.0))
    throw DimMismatchError("EvidenceProblem: sigma2 must be > 0");
  for (const auto& c : constraints) {
    if (c.epsilon < 0.0)
      throw DimMismatchError("EvidenceProblem: epsilon must be >= 0");
    if (ambient_dim(c.set) != dim())
      throw DimMismatchError("EvidenceProblem: set dimension mismatch");
  }
}

EvidenceProblem build_problem(const SystemModel& model, const Projector& proj,
                              const std::vector<UncertaintySet>& sets,
                              const VectorXd& x, const EvidenceConfig& cfg) {
  if (static_cast<int>(sets.size()) != model.state_dim())
    throw DimMismatchError("build_problem: one uncertainty set per column");
  EvidenceProblem prob;
  prob.x_tilde = residual(proj, x);
  prob.rho_lo = cfg.rho_lo;
  prob.rho_hi = cfg.rho_hi;
  prob.sigma2 = cfg.sigma2.value_or(model.sigma2);
  prob.constraints.reserve(sets.size());
  for (size_t i = 0; i < sets.size(); ++i) {
    RobustConstraint c{0.0, sets[i]};
    if (cfg.epsilon) {
      if (cfg.epsilon->size() != sets.size())
        throw DimMismatchError("build_problem: epsilon list size mismatch");
      c.epsilon = (*cfg.epsilon)[i];
    } else {
      c.epsilon = epsilon_guideline(sets[i], cfg.rho_hi, model.obs_dim());
    }
    prob.constraints.push_back(std::move(c));
  }
  prob.validate();
  return prob;
}

EvidenceProblem build_problem(const SystemModel& model,
                              const std::vector<UncertaintySet>& sets,
                              const VectorXd& x, const EvidenceConfig& cfg) {
  return build_problem(model, orthogonal_projector(model), sets, x, cfg);
}

Restriction root_restriction(int dim) {
  return Restriction(static_cast<size_t>(dim));
}

bool is_leaf(const Restriction& r) {
  for (const auto& c : r) {
    if (c.support == SupportState::kFree) return false;
    if (c.support == SupportState::kIncluded && c.sign == SignState::kFree)
      return false;
  }
  return true;
}

std::vector<Interval> hull_intervals(const EvidenceProblem& prob,
                                     const Restriction& r) {
  std::vector<Interval> box(r.size());
  for (size_t m = 0; m < r.size(); ++m) {
    const auto& c = r[m];
    if (c.support == SupportState::kExcluded) {
      box[m] = {0.0, 0.0};
      continue;
    }
    const double lo_mag =
        c.support == SupportState::kIncluded ? prob.rho_lo : 0.0;
    switch (c.sign) {
      case SignState::kNonNegative:
        box[m] = {lo_mag, prob.rho_hi};
        break;
      case SignState::kNonPositive:
        box[m] = {-prob.rho_hi, -lo_mag};
        break;
      case SignState::kFree:
        // Hull of the (possibly two-banded) section.
        box[m] = {-prob.rho_hi, prob.rho_hi};
        break;
    }
  }
  return box;
}

std::vector<Interval> leaf_intervals(const EvidenceProblem& prob,
                                     const Restriction& r) {
  std::vector<Interval> box(r.size());
  for (size_t m = 0; m < r.size(); ++m) {
    const auto& c = r[m];
    if (c.support == SupportState::kExcluded) {
      box[m] = {0.0, 0.0};
    } else if (c.sign == SignState::kNonNegative) {
      box[m] = {prob.rho_lo, prob.rho_hi};
    } else if (c.sign == SignState::kNonPositive) {
      box[m] = {-prob.rho_hi, -prob.rho_lo};
    } else {
      throw DimMismatchError("leaf_intervals: restriction is not a leaf");
    }
  }
  return box;
}

double support_violation(const EvidenceProblem& prob, const VectorXd& mu) {
  double worst = 0.0;
  for (const auto& c : prob.constraints) {
    worst = std::max(worst, absolute_support(c.set, mu) - c.epsilon);
    worst = std::max(worst, absolute_support(c.set, -mu) - c.epsilon);
  }
  return worst;
}

bool CutPool::add(const Eigen::VectorXd& normal, double r) {
  for (size_t k = 0; k < normals.size(); ++k) {
    if (std::abs(rhs[k] - r) <= 1e-12 &&
        (normals[k] - normal).lpNorm<Eigen::Infinity>() <= 1e-12)
      return false;
  }
  normals.push_back(normal);
  rhs.push_back(r);
  return true;
}

FeasibleProjection project_feasible(const EvidenceProblem& prob,
                                    const std::vector<Interval>& box,
                                    const VectorXd& y, double tol,
                                    CutPool* pool) {
  const int M = prob.dim();
  FeasibleProjection out;

  CutPool local;
  CutPool& cuts = pool ? *pool : local;
  const double scale =
      std::max({1.0, y.lpNorm<Eigen::Infinity>(), prob.rho_hi});

  const int max_rounds = 400;
  for (int round = 0; round < max_rounds; ++round) {
    PolyProjection p;
    bool clamped_only = false;
    if (cuts.normals.empty()) {
      clamped_only = true;
    } else {
      // Try the clamp first; if it already satisfies every cut it is the
      // projection (the cuts cost nothing when inactive).
      VectorXd z(M);
      for (int m = 0; m < M; ++m) z(m) = std::clamp(y(m), box[m].lo, box[m].hi);
      clamped_only = true;
      for (size_t k = 0; k < cuts.normals.size(); ++k) {
        if (cuts.normals[k].dot(z) > cuts.rhs[k] + tol * scale) {
          clamped_only = false;
          break;
        }
      }
    }
    if (clamped_only) {
      p.z.resize(M);
      for (int m = 0; m < M; ++m)
        p.z(m) = std::clamp(y(m), box[m].lo, box[m].hi);
      p.multipliers = VectorXd::Zero(2 * M + cuts.normals.size());
    } else {
      const int n_rows = 2 * M + static_cast<int>(cuts.normals.size());
      MatrixXd A(n_rows, M);
      VectorXd b(n_rows);
      for (int m = 0; m < M; ++m) {
        A.row(2 * m).setZero();
        A(2 * m, m) = 1.0;
        b(2 * m) = box[m].hi;
        A.row(2 * m + 1).setZero();
        A(2 * m + 1, m) = -1.0;
        b(2 * m + 1) = -box[m].lo;
      }
      for (size_t k = 0; k < cuts.normals.size(); ++k) {
        A.row(2 * M + static_cast<int>(k)) = cuts.normals[k].transpose();
        b(2 * M + static_cast<int>(k)) = cuts.rhs[k];
      }
      p = project_polyhedron(y, A, b);
    }
    if (!p.feasible) {
      out.feasible = false;
      out.cut_rounds = round;
      return out;
    }

    // Generate the deepest supporting cut per violated constraint side.
    bool added = false;
    double worst = 0.0;
    for (const auto& c : prob.constraints) {
      for (double sgn : {1.0, -1.0}) {
        const VectorXd dir = sgn * p.z;
        const double viol = absolute_support(c.set, dir) - c.epsilon;
        worst = std::max(worst, viol);
        if (viol > tol * scale)
          added |= cuts.add(sgn * support_argmax(c.set, dir), c.epsilon);
      }
    }
    if (!added && worst > 1e-7 * scale)
      throw DivergedError("project_feasible: cut generation stalled");
    if (!added) {
      out.mu = p.z;
      out.feasible = true;
      out.max_violation = worst;
      out.cut_rounds = round;
      const int K = static_cast<int>(cuts.normals.size());
      out.cut_normals.resize(K, M);
      out.cut_rhs.resize(K);
      out.cut_multipliers.resize(K);
      for (int k = 0; k < K; ++k) {
        out.cut_normals.row(k) = cuts.normals[static_cast<size_t>(k)].transpose();
        out.cut_rhs(k) = cuts.rhs[static_cast<size_t>(k)];
        out.cut_multipliers(k) = p.multipliers(2 * M + k);
      }
      return out;
    }
  }
  throw DivergedError("project_feasible: cut loop failed to converge");
}

bool check_feasible(const EvidenceProblem& prob, const Restriction& r,
                    const VectorXd& mu, double feas_tol) {
  if (mu.size() != prob.dim()) return false;
  for (int m = 0; m < mu.size(); ++m) {
    const auto& c = r[static_cast<size_t>(m)];
    const double v = mu(m);
    if (c.support == SupportState::kExcluded) {
      if (std::abs(v) > feas_tol) return false;
      continue;
    }
    if (c.sign == SignState::kNonNegative && v < -feas_tol) return false;
    if (c.sign == SignState::kNonPositive && v > feas_tol) return false;
    if (std::abs(v) > prob.rho_hi + feas_tol) return false;
    if (c.support == SupportState::kIncluded &&
        std::abs(v) < prob.rho_lo - feas_tol)
      return false;
    // A free-support coordinate must sit in a band or at zero.
    if (c.support == SupportState::kFree && std::abs(v) > feas_tol &&
        std::abs(v) < prob.rho_lo - feas_tol)
      return false;
  }
  return support_violation(prob, mu) <= feas_tol;
}

}  // namespace rosguard
