#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dabid/optimizers.hpp"

namespace dabid {

int default_population(int dimension) {
  if (dimension < 1) throw ValidationError("CMA-ES dimension must be positive");
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dimension))));
}

std::vector<double> standard_initial_mean(int dimension, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> mean(static_cast<std::size_t>(dimension));
  for (double& v : mean) v = normal(rng);
  return mean;
}

std::vector<double> opportunistic_initial_mean(std::uint64_t seed) {
  std::vector<double> mean = standard_initial_mean(kOpportunisticParamCount, seed);
  // alpha_{4h+5} and alpha_{4h+6} (1-based) start around exp(-2) of v-bar.
  for (int h = 0; h < kHoursPerDay; ++h) {
    mean[static_cast<std::size_t>(4 * h + 4)] -= 2.0;
    mean[static_cast<std::size_t>(4 * h + 5)] -= 2.0;
  }
  return mean;
}

CmaesResult cmaes_maximize(const Objective& objective, int dimension, const CmaesConfig& config) {
  const int n = dimension;
  const int lambda = config.population > 0 ? config.population : default_population(n);
  if (lambda < 4) throw ValidationError("CMA-ES population must be at least 4");
  if (!(config.initial_sigma > 0.0)) throw ValidationError("CMA-ES initial sigma must be positive");
  if (config.generations < 0) throw ValidationError("CMA-ES generations must be non-negative");
  if (!config.initial_mean.empty() && static_cast<int>(config.initial_mean.size()) != n) {
    throw ValidationError("CMA-ES initial mean has the wrong dimension");
  }

  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int mu = lambda / 2;
  Eigen::VectorXd weights(mu);
  for (int i = 0; i < mu; ++i) weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mu_eff = 1.0 / weights.squaredNorm();

  const double nd = n;
  const double c_sigma = (mu_eff + 2.0) / (nd + mu_eff + 5.0);
  const double d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (nd + 1.0)) - 1.0) + c_sigma;
  const double c_c = (4.0 + mu_eff / nd) / (nd + 4.0 + 2.0 * mu_eff / nd);
  const double c_1 = 2.0 / ((nd + 1.3) * (nd + 1.3) + mu_eff);
  const double c_mu = std::min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nd + 2.0) * (nd + 2.0) + mu_eff));
  const double chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

  Eigen::VectorXd mean(n);
  if (config.initial_mean.empty()) {
    for (int i = 0; i < n; ++i) mean[i] = normal(rng);
  } else {
    for (int i = 0; i < n; ++i) mean[i] = config.initial_mean[static_cast<std::size_t>(i)];
  }
  double sigma = config.initial_sigma;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd scales = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd p_sigma = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p_c = Eigen::VectorXd::Zero(n);

  CmaesResult result;
  result.best_value = -std::numeric_limits<double>::infinity();
  result.best = mean;

  std::vector<Eigen::VectorXd> y(static_cast<std::size_t>(lambda));
  std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(lambda));
  std::vector<double> f(static_cast<std::size_t>(lambda));
  std::vector<int> order(static_cast<std::size_t>(lambda));

  for (int g = 0; g < config.generations; ++g) {
    for (int k = 0; k < lambda; ++k) {
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = normal(rng);
      y[k] = basis * scales.cwiseProduct(z);
      x[k] = mean + sigma * y[k];
    }
    double finite_sum = 0.0;
    int finite_count = 0;
    for (int k = 0; k < lambda; ++k) {
      const double value = objective(x[k]);
      f[k] = std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
      if (std::isfinite(value)) {
        finite_sum += value;
        ++finite_count;
      }
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] > f[b]; });

    if (f[order[0]] > result.best_value || g == 0) {
      result.best_value = f[order[0]];
      result.best = x[order[0]];
    }
    CmaesGeneration record;
    record.generation = g;
    record.best_value = f[order[0]];
    record.mean_value = finite_count > 0 ? finite_sum / finite_count : f[order[0]];
    record.sigma = sigma;
    if (config.record_candidates) {
      record.candidates = x;
      record.ranking = order;
    }
    result.history.push_back(std::move(record));

    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < mu; ++i) y_w += weights[i] * y[order[i]];
    mean += sigma * y_w;

    // C^{-1/2} y_w = B D^{-1} B^T y_w
    const Eigen::VectorXd c_inv_sqrt_y = basis * (basis.transpose() * y_w).cwiseQuotient(scales);
    p_sigma = (1.0 - c_sigma) * p_sigma + std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff) * c_inv_sqrt_y;
    const double ps_norm = p_sigma.norm();
    const double correction = std::sqrt(1.0 - std::pow(1.0 - c_sigma, 2.0 * (g + 1)));
    const bool h_sigma = ps_norm / correction < (1.4 + 2.0 / (nd + 1.0)) * chi_n;
    p_c = (1.0 - c_c) * p_c + (h_sigma ? std::sqrt(c_c * (2.0 - c_c) * mu_eff) : 0.0) * y_w;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) rank_mu += weights[i] * y[order[i]] * y[order[i]].transpose();
    const double delta_h = h_sigma ? 0.0 : c_c * (2.0 - c_c);
    cov = (1.0 - c_1 - c_mu) * cov + c_1 * (p_c * p_c.transpose() + delta_h * cov) + c_mu * rank_mu;
    sigma *= std::exp((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0));

    cov = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    basis = eig.eigenvectors();
    scales = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
  }
  result.mean = mean;
  result.final_sigma = sigma;
  return result;
}

}  // namespace dabid
