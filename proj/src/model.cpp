#include "rosguard/model.hpp"

#include <Eigen/SVD>

#include "rosguard/errors.hpp"

namespace rosguard {

using Eigen::MatrixXd;
using Eigen::VectorXd;

SystemModel::SystemModel(MatrixXd H_, double sigma2_, double rank_tol)
    : H(std::move(H_)), sigma2(sigma2_) {
  if (H.rows() <= H.cols() || H.cols() < 1)
    throw DimMismatchError("SystemModel: need M > N >= 1");
  if (!(sigma2 > 0.0)) throw DimMismatchError("SystemModel: sigma2 must be > 0");
  // Full column rank check; construction of the projector repeats it.
  Eigen::JacobiSVD<MatrixXd> svd(H);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) < rank_tol * sv(0))
    throw RankDeficientError("SystemModel: H is rank deficient");
}

Projector orthogonal_projector(const SystemModel& model, double rank_tol) {
  const MatrixXd& H = model.H;
  Eigen::JacobiSVD<MatrixXd> svd(H, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) < rank_tol * sv(0))
    throw RankDeficientError("orthogonal_projector: H is rank deficient");
  const int rank = static_cast<int>(sv.size());
  const int M = model.obs_dim();
  Projector proj;
  proj.rank = rank;
  const MatrixXd U = svd.matrixU().leftCols(rank);
  proj.P = MatrixXd::Identity(M, M) - U * U.transpose();
  // Symmetrize away rounding noise.
  proj.P = 0.5 * (proj.P + proj.P.transpose()).eval();
  return proj;
}

VectorXd residual(const Projector& proj, const VectorXd& x) {
  if (x.size() != proj.P.rows())
    throw DimMismatchError("residual: x has wrong dimension");
  return proj.P * x;
}

VectorXd default_theta(int state_dim, Rng& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  VectorXd theta(state_dim);
  for (int i = 0; i < state_dim; ++i) theta(i) = unif(rng);
  return theta;
}

ChangeScenario ChangeScenario::no_change(std::uint64_t seed) {
  ChangeScenario s;
  s.t_a = std::numeric_limits<std::int64_t>::max();
  s.seed = seed;
  return s;
}

ChangeScenario ChangeScenario::constant_shift(VectorXd mu, std::int64_t t_a,
                                              std::uint64_t seed) {
  ChangeScenario s;
  s.t_a = t_a;
  s.seed = seed;
  s.delta_h_gen = [mu = std::move(mu)](int, const VectorXd& theta, Rng&) {
    const double denom = theta.squaredNorm();
    if (denom <= 0.0) return MatrixXd::Zero(mu.size(), theta.size()).eval();
    return MatrixXd((mu / denom) * theta.transpose());
  };
  return s;
}

std::vector<VectorXd> generate_stream(const SystemModel& model,
                                      const ChangeScenario& scenario, int T) {
  if (T < 1) throw DimMismatchError("generate_stream: T must be >= 1");
  const int M = model.obs_dim();
  const int N = model.state_dim();
  Rng rng(scenario.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise_std =
      scenario.noise_std.value_or(std::sqrt(model.sigma2));

  std::vector<VectorXd> xs;
  xs.reserve(T);
  for (int t = 1; t <= T; ++t) {
    const VectorXd theta = scenario.theta_gen
                               ? scenario.theta_gen(t, N, rng)
                               : default_theta(N, rng);
    VectorXd x = model.H * theta;
    if (t >= scenario.t_a && scenario.delta_h_gen)
      x += scenario.delta_h_gen(t, theta, rng) * theta;
    // Noise draws happen even at noise_std == 0 to keep the draw sequence,
    // and therefore theta, identical between noisy and noiseless runs.
    for (int i = 0; i < M; ++i) x(i) += noise_std * gauss(rng);
    xs.push_back(std::move(x));
  }
  return xs;
}

}  // namespace rosguard
