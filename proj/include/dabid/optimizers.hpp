#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dabid/market_env.hpp"
#include "dabid/neuralnet.hpp"
#include "dabid/strategies.hpp"

namespace dabid {

// ---------------------------------------------------------------- evaluation

struct EvaluationResult {
  double total = 0.0;
  std::vector<DayResult> days;  // filled when requested
};

struct EvaluationOptions {
  bool include_weather = true;  // only matters for policy strategies
  bool keep_days = false;
  const PriceAnchors* anchors = nullptr;  // optional cache over the same dataset
  const ObservationScales* scales = nullptr;
};

// Plays `strategy` over the delivery days [range.begin, range.end), starting
// from a fresh reset at the decision point of range.begin - 1. Consumption
// noise and exploration noise are drawn from streams of `seed`.
EvaluationResult evaluate_strategy(const Strategy& strategy, const Dataset& dataset, DayRange range,
                                   const EnvConfig& config, std::uint64_t seed,
                                   const EvaluationOptions& options = {});

// ---------------------------------------------------------------- CMA-ES

int default_population(int dimension);

struct CmaesConfig {
  std::vector<double> initial_mean;  // empty: N(0, 1) draws
  double initial_sigma = 1.0;
  int population = 0;  // <= 0: 4 + floor(3 ln n)
  int generations = 100;
  std::uint64_t seed = 0;
  bool record_candidates = false;
};

struct CmaesGeneration {
  int generation = 0;
  double best_value = 0.0;
  double mean_value = 0.0;  // over finite candidates
  double sigma = 0.0;
  std::vector<Eigen::VectorXd> candidates;  // record_candidates only
  std::vector<int> ranking;                 // candidate indices, best first
};

struct CmaesResult {
  Eigen::VectorXd mean;  // final distribution mean, the reported solution
  Eigen::VectorXd best;  // best candidate ever sampled
  double best_value = 0.0;
  double final_sigma = 0.0;
  std::vector<CmaesGeneration> history;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Maximizes `objective` with rank-based CMA-ES. Non-finite values rank last.
CmaesResult cmaes_maximize(const Objective& objective, int dimension, const CmaesConfig& config);

// Initial mean for the opportunistic strategy: N(-2, 1) for the volume
// offsets, N(0, 1) elsewhere.
std::vector<double> opportunistic_initial_mean(std::uint64_t seed);
std::vector<double> standard_initial_mean(int dimension, std::uint64_t seed);

// ---------------------------------------------------------------- A2C

struct A2cConfig {
  long total_timesteps = 200'000;  // simulated decision days
  long eval_frequency = 9'000;
  int episode_length = 90;
  int n_steps = 90;
  double gamma = 0.9;
  double gae_lambda = 0.9;
  double vf_coef = 0.5;
  double ent_coef = 0.0;
  double learning_rate = 1e-4;
  double rms_prop_decay = 0.99;
  double rms_prop_eps = 1e-5;
  double max_grad_norm = 0.5;
  double log_std_init = -1.0;
  int net_arch = 200;
  // Rewards are divided by this before entering the losses.
  double reward_scale = 100.0;
  int validation_days = 90;
  int test_days = 365;
  bool include_weather = true;
  std::uint64_t seed = 0;
};

void validate(const A2cConfig& config);

// Generalized advantage estimates over one rollout. episode_end[t] marks that
// the episode finished with step t (no bootstrapping past it); last_value is
// V of the state following the final step when that episode continues.
std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                std::span<const char> episode_end, double last_value, double gamma, double lambda);

struct Rollout {
  Eigen::MatrixXd observations;  // one column per step
  Eigen::MatrixXd raw_actions;   // 96 x steps, pre-clip samples
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<char> episode_end;
  double last_value = 0.0;
};

struct A2cLosses {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
};

// Loss gradients of one rollout (actor: -mean(log pi * A) - ent_coef * H,
// critic: vf_coef * mean((R - V)^2)), written into `grads`.
A2cLosses a2c_gradients(const PolicyParams& policy, const Rollout& rollout, std::span<const double> advantages,
                        std::span<const double> returns, const A2cConfig& config, PolicyGradients& grads);

// Clips, applies RMSprop, and returns the losses of the update.
A2cLosses a2c_update(PolicyParams& policy, const Rollout& rollout, const A2cConfig& config, RmsPropState& optimizer);

struct EvalPoint {
  long step = 0;
  double val_reward = 0.0;
  bool is_best = false;
};

struct TrainingRun {
  std::vector<EvalPoint> log;
  PolicyParams best_policy;
  double best_val_reward = 0.0;
  long best_step = 0;
  double test_total = 0.0;
  std::vector<DayResult> test_days;
  DayRange validation_range;
  DayRange test_range;
  std::uint64_t seed = 0;
  long updates = 0;
};

// Training windows start uniformly among the train-split delivery days that
// leave room for a full episode after the price-statistics warm-up.
DayRange training_start_days(const Dataset& dataset, const EnvConfig& config, int episode_length);
DayRange validation_window(const Dataset& dataset, const EnvConfig& config, int days);
DayRange test_window(const Dataset& dataset, int days);

using ProgressCallback = std::function<void(const EvalPoint&)>;

TrainingRun a2c_train(std::shared_ptr<const Dataset> dataset, const EnvConfig& env_config, PolicyParams policy,
                      const A2cConfig& config, const ProgressCallback& progress = {});

// Fresh policy shaped for `config`, with observation constants of `dataset`.
PolicyParams make_initial_policy(const Dataset& dataset, const EnvConfig& env_config, const A2cConfig& config);

void write_training_log(const std::filesystem::path& path, std::span<const EvalPoint> log);

}  // namespace dabid
