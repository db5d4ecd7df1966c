#include "rosguard/uncertainty.hpp"

#include <algorithm>
#include <numeric>

#include "rosguard/errors.hpp"
#include "rosguard/qp.hpp"

namespace rosguard {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr int kMaxGeneralRows = 12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Detects rows of the form +-e_j and extracts per-coordinate bounds.
// Returns false when any row is not axis-aligned.
bool extract_box(const MatrixXd& D, const VectorXd& d, VectorXd& lo,
                 VectorXd& hi) {
  const int M = static_cast<int>(D.cols());
  lo = VectorXd::Constant(M, -kInf);
  hi = VectorXd::Constant(M, kInf);
  for (int r = 0; r < D.rows(); ++r) {
    int axis = -1;
    double coef = 0.0;
    for (int j = 0; j < M; ++j) {
      if (D(r, j) != 0.0) {
        if (axis >= 0) return false;
        axis = j;
        coef = D(r, j);
      }
    }
    if (axis < 0) {
      if (d(r) < 0) throw InfeasibleDualError("polyhedral set: 0 <= d violated");
      continue;  // vacuous row
    }
    if (coef > 0)
      hi(axis) = std::min(hi(axis), d(r) / coef);
    else
      lo(axis) = std::max(lo(axis), d(r) / coef);
  }
  return true;
}

std::vector<VectorXd> enumerate_vertices(const MatrixXd& D, const VectorXd& d) {
  const int M = static_cast<int>(D.cols());
  const int R = static_cast<int>(D.rows());
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  std::vector<VectorXd> verts;
  std::vector<int> comb(M);
  std::iota(comb.begin(), comb.end(), 0);

  auto push_candidate = [&](const std::vector<int>& rows) {
    MatrixXd B(M, M);
    VectorXd rhs(M);
    for (int i = 0; i < M; ++i) {
      B.row(i) = D.row(rows[i]);
      rhs(i) = d(rows[i]);
    }
    Eigen::FullPivLU<MatrixXd> lu(B);
    if (!lu.isInvertible()) return;
    const VectorXd v = lu.solve(rhs);
    if (((D * v - d).array() > 1e-8 * scale).any()) return;
    for (const auto& w : verts)
      if ((w - v).lpNorm<Eigen::Infinity>() <= 1e-8 * scale) return;
    verts.push_back(v);
  };

  // All M-row subsets of the R rows.
  std::vector<int> idx(M);
  std::function<void(int, int)> rec = [&](int start, int k) {
    if (k == M) {
      push_candidate(idx);
      return;
    }
    for (int r = start; r < R; ++r) {
      idx[k] = r;
      rec(r + 1, k + 1);
    }
  };
  rec(0, 0);
  return verts;
}

// The recession cone {v : Dv <= 0} is trivial iff projecting every +-e_j
// onto it gives zero.
bool recession_cone_trivial(const MatrixXd& D) {
  const int M = static_cast<int>(D.cols());
  const VectorXd zero = VectorXd::Zero(D.rows());
  for (int j = 0; j < M; ++j) {
    for (double sgn : {1.0, -1.0}) {
      VectorXd e = VectorXd::Zero(M);
      e(j) = sgn;
      const auto p = project_polyhedron(e, D, zero);
      if (p.z.norm() > 1e-7) return false;
    }
  }
  return true;
}

template <typename... F>
struct overloaded : F... {
  using F::operator()...;
};
template <typename... F>
overloaded(F...) -> overloaded<F...>;

}  // namespace

PolyhedralSet::PolyhedralSet(MatrixXd D_, VectorXd d_,
                             std::optional<VectorXd> nominal)
    : D(std::move(D_)), d(std::move(d_)) {
  if (D.rows() != d.size())
    throw DimMismatchError("PolyhedralSet: D rows must match d");
  VectorXd lo, hi;
  if (extract_box(D, d, lo, hi)) {
    if ((lo.array() > hi.array()).any())
      throw InfeasibleDualError("PolyhedralSet: empty box");
    if (!lo.allFinite() || !hi.allFinite())
      throw UnboundedSetError("PolyhedralSet: box is unbounded");
    is_box_ = true;
    lo_ = lo;
    hi_ = hi;
    nominal_ = nominal.value_or(0.5 * (lo + hi));
    return;
  }
  if (D.rows() > kMaxGeneralRows)
    throw TooLargeError(
        "PolyhedralSet: general (non-box) sets support at most 12 rows");
  if (!project_polyhedron(VectorXd::Zero(dim()), D, d).feasible)
    throw InfeasibleDualError("PolyhedralSet: empty set");
  if (!recession_cone_trivial(D))
    throw UnboundedSetError("PolyhedralSet: unbounded set");
  vertices_ = enumerate_vertices(D, d);
  if (vertices_.empty())
    throw UnboundedSetError("PolyhedralSet: no vertices found");
  VectorXd centroid = VectorXd::Zero(dim());
  for (const auto& v : vertices_) centroid += v;
  centroid /= static_cast<double>(vertices_.size());
  nominal_ = nominal.value_or(centroid);
}

PolyhedralSet box_set(const VectorXd& lo, const VectorXd& hi,
                      std::optional<VectorXd> nominal) {
  const int M = static_cast<int>(lo.size());
  if (hi.size() != M) throw DimMismatchError("box_set: lo/hi sizes differ");
  MatrixXd D(2 * M, M);
  D << MatrixXd::Identity(M, M), -MatrixXd::Identity(M, M);
  VectorXd d(2 * M);
  d << hi, -lo;
  return PolyhedralSet(std::move(D), std::move(d), std::move(nominal));
}

EllipsoidSet::EllipsoidSet(VectorXd center_, double radius_)
    : center(std::move(center_)), radius(radius_) {
  if (radius < 0.0) throw DimMismatchError("EllipsoidSet: radius must be >= 0");
}

DNormSet::DNormSet(VectorXd center_, int kappa_, double u_hat_)
    : center(std::move(center_)), kappa(kappa_), u_hat(u_hat_) {
  if (kappa < 0 || kappa > center.size())
    throw DimMismatchError("DNormSet: need 0 <= kappa <= M");
  if (u_hat < 0.0) throw DimMismatchError("DNormSet: u_hat must be >= 0");
}

int ambient_dim(const UncertaintySet& set) {
  return std::visit([](const auto& s) { return s.dim(); }, set);
}

const VectorXd& nominal(const UncertaintySet& set) {
  return std::visit(
      overloaded{[](const PolyhedralSet& s) -> const VectorXd& {
                   return s.nominal();
                 },
                 [](const EllipsoidSet& s) -> const VectorXd& {
                   return s.center;
                 },
                 [](const DNormSet& s) -> const VectorXd& { return s.center; }},
      set);
}

namespace {

double dnorm_deviation_support(const DNormSet& s, const VectorXd& mu) {
  // u_hat * (sum of the kappa largest |mu_m|).
  std::vector<double> mags(mu.size());
  for (int i = 0; i < mu.size(); ++i) mags[i] = std::abs(mu(i));
  std::partial_sort(mags.begin(), mags.begin() + s.kappa, mags.end(),
                    std::greater<double>());
  double acc = 0.0;
  for (int i = 0; i < s.kappa; ++i) acc += mags[i];
  return s.u_hat * acc;
}

}  // namespace

double absolute_support(const UncertaintySet& set, const VectorXd& mu) {
  if (mu.size() != ambient_dim(set))
    throw DimMismatchError("support: mu has wrong dimension");
  return std::visit(
      overloaded{
          [&](const PolyhedralSet& s) {
            if (s.is_box()) {
              double acc = 0.0;
              for (int m = 0; m < mu.size(); ++m)
                acc += std::max(s.lower()(m) * mu(m), s.upper()(m) * mu(m));
              return acc;
            }
            double best = -kInf;
            for (const auto& v : s.vertices()) best = std::max(best, v.dot(mu));
            return best;
          },
          [&](const EllipsoidSet& s) {
            return s.center.dot(mu) + s.radius * mu.norm();
          },
          [&](const DNormSet& s) {
            return s.center.dot(mu) + dnorm_deviation_support(s, mu);
          }},
      set);
}

double support_function(const UncertaintySet& set, const VectorXd& mu) {
  return absolute_support(set, mu) - nominal(set).dot(mu);
}

VectorXd support_argmax(const UncertaintySet& set, const VectorXd& mu) {
  if (mu.size() != ambient_dim(set))
    throw DimMismatchError("support_argmax: mu has wrong dimension");
  return std::visit(
      overloaded{
          [&](const PolyhedralSet& s) {
            if (s.is_box()) {
              VectorXd h(mu.size());
              for (int m = 0; m < mu.size(); ++m)
                h(m) = mu(m) >= 0 ? s.upper()(m) : s.lower()(m);
              return h;
            }
            int best = 0;
            double best_val = -kInf;
            for (size_t i = 0; i < s.vertices().size(); ++i) {
              const double v = s.vertices()[i].dot(mu);
              if (v > best_val) {
                best_val = v;
                best = static_cast<int>(i);
              }
            }
            return s.vertices()[best];
          },
          [&](const EllipsoidSet& s) {
            const double nrm = mu.norm();
            if (nrm == 0.0) return s.center;
            return VectorXd(s.center + (s.radius / nrm) * mu);
          },
          [&](const DNormSet& s) {
            std::vector<int> order(mu.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
              const double ma = std::abs(mu(a)), mb = std::abs(mu(b));
              return ma != mb ? ma > mb : a < b;
            });
            VectorXd h = s.center;
            for (int i = 0; i < s.kappa; ++i) {
              const int m = order[i];
              h(m) += mu(m) >= 0 ? s.u_hat : -s.u_hat;
            }
            return h;
          }},
      set);
}

double dual_feasible_bound(const PolyhedralSet& set, const VectorXd& p,
                           const VectorXd& mu, double feas_tol) {
  if (p.size() != set.D.rows() || mu.size() != set.dim())
    throw DimMismatchError("dual_feasible_bound: size mismatch");
  if (p.minCoeff() < -feas_tol)
    throw InfeasibleDualError("dual_feasible_bound: p has negative entries");
  const VectorXd gap = set.D.transpose() * p - mu;
  if (gap.lpNorm<Eigen::Infinity>() > feas_tol)
    throw InfeasibleDualError("dual_feasible_bound: D^T p != mu");
  return p.dot(set.d);
}

double diameter(const UncertaintySet& set) {
  return std::visit(
      overloaded{[&](const PolyhedralSet& s) {
                   if (s.is_box()) return (s.upper() - s.lower()).norm();
                   double best = 0.0;
                   for (size_t i = 0; i < s.vertices().size(); ++i)
                     for (size_t j = i + 1; j < s.vertices().size(); ++j)
                       best = std::max(
                           best, (s.vertices()[i] - s.vertices()[j]).norm());
                   return best;
                 },
                 [&](const EllipsoidSet& s) { return 2.0 * s.radius; },
                 [&](const DNormSet& s) {
                   return 2.0 * s.u_hat * std::sqrt(double(s.kappa));
                 }},
      set);
}

double epsilon_guideline(const UncertaintySet& set, double rho_h, int M) {
  if (!(rho_h > 0.0))
    throw DimMismatchError("epsilon_guideline: rho_h must be > 0");
  return diameter(set) * rho_h * std::sqrt(double(M));
}

bool contains(const UncertaintySet& set, const VectorXd& h, double tol) {
  if (h.size() != ambient_dim(set)) return false;
  return std::visit(
      overloaded{[&](const PolyhedralSet& s) {
                   return ((s.D * h - s.d).array() <= tol).all();
                 },
                 [&](const EllipsoidSet& s) {
                   return (h - s.center).norm() <= s.radius + tol;
                 },
                 [&](const DNormSet& s) {
                   const VectorXd delta = (h - s.center).cwiseAbs();
                   return delta.maxCoeff() <= s.u_hat + tol &&
                          delta.sum() <= s.kappa * s.u_hat + tol;
                 }},
      set);
}

VectorXd sample_point(const UncertaintySet& set, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return std::visit(
      overloaded{
          [&](const PolyhedralSet& s) {
            if (s.is_box()) {
              VectorXd h(s.dim());
              for (int m = 0; m < s.dim(); ++m)
                h(m) = s.lower()(m) +
                       unif(rng) * (s.upper()(m) - s.lower()(m));
              return h;
            }
            // Random convex combination of vertices.
            VectorXd w(s.vertices().size());
            for (int i = 0; i < w.size(); ++i)
              w(i) = -std::log(std::max(unif(rng), 1e-300));
            w /= w.sum();
            VectorXd h = VectorXd::Zero(s.dim());
            for (size_t i = 0; i < s.vertices().size(); ++i)
              h += w(static_cast<int>(i)) * s.vertices()[i];
            return h;
          },
          [&](const EllipsoidSet& s) {
            std::normal_distribution<double> gauss;
            VectorXd dir(s.dim());
            for (int m = 0; m < s.dim(); ++m) dir(m) = gauss(rng);
            const double nrm = dir.norm();
            if (nrm == 0.0) return s.center;
            const double scale =
                s.radius * std::pow(unif(rng), 1.0 / s.dim());
            return VectorXd(s.center + (scale / nrm) * dir);
          },
          [&](const DNormSet& s) {
            VectorXd h = s.center;
            std::vector<int> order(s.dim());
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            for (int i = 0; i < s.kappa; ++i)
              h(order[i]) += s.u_hat * (2.0 * unif(rng) - 1.0);
            return h;
          }},
      set);
}

}  // namespace rosguard
