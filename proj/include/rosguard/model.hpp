#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace rosguard {

using Rng = std::mt19937_64;

/// Linear observation model x = H theta + n with n ~ N(0, sigma2 I).
/// H must have full column rank (checked at construction).
struct SystemModel {
  Eigen::MatrixXd H;  // M x N, N < M
  double sigma2 = 1.0;

  SystemModel(Eigen::MatrixXd H_, double sigma2_, double rank_tol = 1e-10);

  int obs_dim() const { return static_cast<int>(H.rows()); }    // M
  int state_dim() const { return static_cast<int>(H.cols()); }  // N
};

/// Orthogonal projector onto the complement of the column space of H.
struct Projector {
  Eigen::MatrixXd P;  // M x M, symmetric idempotent, P H = 0
  int rank = 0;       // rank of H
};

/// P = I - H (H^T H)^{-1} H^T, computed from an orthogonal decomposition.
/// Throws RankDeficientError when smallest/largest singular value < rank_tol.
Projector orthogonal_projector(const SystemModel& model,
                               double rank_tol = 1e-10);

/// x_tilde = P x. Throws DimMismatchError on size mismatch.
Eigen::VectorXd residual(const Projector& proj, const Eigen::VectorXd& x);

/// Time-varying ingredients of a change experiment. Both generators are
/// pluggable; defaults below mirror the stock experiments.
struct ChangeScenario {
  // theta^(t); default draws i.i.d. uniform on [-1,1]^N.
  std::function<Eigen::VectorXd(int t, int state_dim, Rng&)> theta_gen;
  // Delta H^(t) applied for t >= t_a.
  std::function<Eigen::MatrixXd(int t, const Eigen::VectorXd& theta, Rng&)>
      delta_h_gen;
  std::int64_t t_a = 1;  // change step (1-based); beyond the horizon = no change
  std::uint64_t seed = 0;
  // Overrides the noise standard deviation (default sqrt(model.sigma2)).
  // Zero gives the noiseless streams used by the deterministic tests.
  std::optional<double> noise_std;

  static ChangeScenario no_change(std::uint64_t seed);
  /// Rank-one injection Delta H^(t) = mu theta^T / (theta^T theta), so the
  /// observation shift is exactly `mu` each post-change step.
  static ChangeScenario constant_shift(Eigen::VectorXd mu, std::int64_t t_a,
                                       std::uint64_t seed);
};

Eigen::VectorXd default_theta(int state_dim, Rng& rng);

/// x^(t) for t = 1..T: H theta + n before t_a, (H + dH) theta + n after.
/// Deterministic given (model, scenario, T).
std::vector<Eigen::VectorXd> generate_stream(const SystemModel& model,
                                             const ChangeScenario& scenario,
                                             int T);

}  // namespace rosguard
