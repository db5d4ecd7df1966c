#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "rosguard/model.hpp"

namespace rosguard {

/// Column uncertainty {h : D h <= d}. The set must be nonempty and bounded;
/// both are checked at construction. Sets of the form [I; -I] (axis-aligned
/// boxes) are recognized and take exact fast paths; any other shape is
/// handled through vertex enumeration and limited to 12 rows.
struct PolyhedralSet {
  Eigen::MatrixXd D;
  Eigen::VectorXd d;

  PolyhedralSet(Eigen::MatrixXd D_, Eigen::VectorXd d_,
                std::optional<Eigen::VectorXd> nominal = std::nullopt);

  bool is_box() const { return is_box_; }
  const Eigen::VectorXd& lower() const { return lo_; }
  const Eigen::VectorXd& upper() const { return hi_; }
  const std::vector<Eigen::VectorXd>& vertices() const { return vertices_; }
  const Eigen::VectorXd& nominal() const { return nominal_; }
  int dim() const { return static_cast<int>(D.cols()); }

 private:
  bool is_box_ = false;
  Eigen::VectorXd lo_, hi_;
  std::vector<Eigen::VectorXd> vertices_;
  Eigen::VectorXd nominal_;
};

/// Builds the [I; -I] polyhedron for the box [lo, hi].
PolyhedralSet box_set(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                      std::optional<Eigen::VectorXd> nominal = std::nullopt);

/// {center + u : ||u||_2 <= radius}.
struct EllipsoidSet {
  Eigen::VectorXd center;
  double radius = 0.0;

  EllipsoidSet(Eigen::VectorXd center_, double radius_);
  int dim() const { return static_cast<int>(center.size()); }
};

/// Budgeted interval uncertainty: at most `kappa` components deviate, each
/// within +-u_hat (taken as the convex budget set ||delta||_inf <= u_hat,
/// ||delta||_1 <= kappa u_hat).
struct DNormSet {
  Eigen::VectorXd center;
  int kappa = 0;
  double u_hat = 0.0;

  DNormSet(Eigen::VectorXd center_, int kappa_, double u_hat_);
  int dim() const { return static_cast<int>(center.size()); }
};

using UncertaintySet = std::variant<PolyhedralSet, EllipsoidSet, DNormSet>;

int ambient_dim(const UncertaintySet& set);
const Eigen::VectorXd& nominal(const UncertaintySet& set);

/// Centered support: max over h in S of (h - nominal)^T mu.
double support_function(const UncertaintySet& set, const Eigen::VectorXd& mu);

/// Absolute support: max over h in S of h^T mu.
double absolute_support(const UncertaintySet& set, const Eigen::VectorXd& mu);

/// A maximizer of h^T mu over the set (supporting-point oracle).
Eigen::VectorXd support_argmax(const UncertaintySet& set,
                               const Eigen::VectorXd& mu);

/// Weak-duality certificate value p^T d for the polyhedral support LP.
/// Requires p >= 0 and ||D^T p - mu||_inf <= feas_tol; the returned value
/// upper-bounds max over the set of h^T mu.
double dual_feasible_bound(const PolyhedralSet& set, const Eigen::VectorXd& p,
                           const Eigen::VectorXd& mu, double feas_tol = 1e-8);

/// Largest pairwise distance within the set.
double diameter(const UncertaintySet& set);

/// Slack guideline diameter * rho_h * sqrt(M).
double epsilon_guideline(const UncertaintySet& set, double rho_h, int M);

bool contains(const UncertaintySet& set, const Eigen::VectorXd& h,
              double tol = 1e-9);

/// A random member of the set (used by sampling oracles and scenarios).
Eigen::VectorXd sample_point(const UncertaintySet& set, Rng& rng);

}  // namespace rosguard
