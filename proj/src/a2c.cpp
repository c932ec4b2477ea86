#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "csv.hpp"
#include "dabid/optimizers.hpp"

namespace dabid {

namespace {

constexpr std::uint64_t kValidationStream = 0x76616c;

}  // namespace

void validate(const A2cConfig& c) {
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ValidationError("gamma must be in (0, 1]");
  if (!(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0)) throw ValidationError("gae_lambda must be in [0, 1]");
  if (c.total_timesteps < 1) throw ValidationError("total_timesteps must be positive");
  if (c.eval_frequency < 1) throw ValidationError("eval_frequency must be positive");
  if (c.episode_length < 1 || c.n_steps < 1) throw ValidationError("episode_length and n_steps must be positive");
  if (!(c.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(c.rms_prop_eps > 0.0)) throw ValidationError("rms_prop_eps must be positive");
  if (!(c.reward_scale > 0.0)) throw ValidationError("reward_scale must be positive");
  if (c.net_arch < 1) throw ValidationError("net_arch must be positive");
  if (c.validation_days < 1 || c.test_days < 1) throw ValidationError("validation_days and test_days must be positive");
}

std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                std::span<const char> episode_end, double last_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || episode_end.size() != n) {
    throw ValidationError("compute_gae: rewards, values and episode_end must have equal length");
  }
  std::vector<double> advantages(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = i + 1 < n ? values[i + 1] : last_value;
    const double not_done = episode_end[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * not_done - values[i];
    running = delta + gamma * lambda * not_done * running;
    advantages[i] = running;
  }
  return advantages;
}

A2cLosses a2c_gradients(const PolicyParams& policy, const Rollout& rollout, std::span<const double> advantages,
                        std::span<const double> returns, const A2cConfig& config, PolicyGradients& grads) {
  const auto steps = rollout.observations.cols();
  const double inv_t = 1.0 / static_cast<double>(steps);
  const Eigen::MatrixXd means = policy.actor.forward(rollout.observations);
  const Eigen::ArrayXd std_dev = policy.log_std.array().exp();
  const Eigen::ArrayXXd z = (rollout.raw_actions - means).array().colwise() / std_dev;
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);

  A2cLosses losses;
  Eigen::MatrixXd mean_grads(means.rows(), steps);
  grads.log_std = Eigen::VectorXd::Zero(policy.log_std.size());
  for (Eigen::Index t = 0; t < steps; ++t) {
    const double a = advantages[static_cast<std::size_t>(t)];
    const double log_prob =
        (-0.5 * z.col(t).square() - policy.log_std.array() - half_log_two_pi).sum();
    losses.policy -= a * log_prob * inv_t;
    mean_grads.col(t) = (-a * inv_t) * (z.col(t) / std_dev).matrix();
    grads.log_std.array() -= a * inv_t * (z.col(t).square() - 1.0);
  }
  losses.entropy = (policy.log_std.array() + 0.5 + half_log_two_pi).sum();
  grads.log_std.array() -= config.ent_coef;
  grads.actor = policy.actor.backward(rollout.observations, mean_grads);

  const Eigen::MatrixXd values = policy.critic.forward(rollout.observations);
  Eigen::MatrixXd value_grads(1, steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const double err = values(0, t) - returns[static_cast<std::size_t>(t)];
    losses.value += err * err * inv_t;
    value_grads(0, t) = config.vf_coef * 2.0 * err * inv_t;
  }
  grads.critic = policy.critic.backward(rollout.observations, value_grads);
  return losses;
}

A2cLosses a2c_update(PolicyParams& policy, const Rollout& rollout, const A2cConfig& config,
                     RmsPropState& optimizer) {
  const std::vector<double> advantages = compute_gae(rollout.rewards, rollout.values, rollout.episode_end,
                                                     rollout.last_value, config.gamma, config.gae_lambda);
  std::vector<double> returns(advantages.size());
  for (std::size_t i = 0; i < returns.size(); ++i) returns[i] = advantages[i] + rollout.values[i];

  PolicyGradients grads;
  A2cLosses losses = a2c_gradients(policy, rollout, advantages, returns, config, grads);
  if (!std::isfinite(losses.policy) || !std::isfinite(losses.value)) {
    std::ostringstream msg;
    msg << "A2C loss became non-finite (policy " << losses.policy << ", value " << losses.value << ")";
    throw TrainingDivergedError(msg.str());
  }
  const auto param_blocks = parameter_blocks(policy);
  const auto grad_blocks = gradient_blocks(grads);
  losses.grad_norm = clip_grad_norm(grad_blocks, config.max_grad_norm);
  try {
    rmsprop_step(param_blocks, grad_blocks, optimizer,
                 RmsPropConfig{config.learning_rate, config.rms_prop_decay, config.rms_prop_eps});
  } catch (const TrainingDivergedError& e) {
    std::ostringstream msg;
    msg << e.what() << " (gradient norm " << losses.grad_norm << ", policy loss " << losses.policy
        << ", value loss " << losses.value << ")";
    throw TrainingDivergedError(msg.str());
  }
  return losses;
}

DayRange training_start_days(const Dataset& dataset, const EnvConfig& config, int episode_length) {
  const DayRange train = dataset.split().train;
  const int first = std::max({train.begin, config.price_stat_window, 1});
  const int last = train.end - episode_length;  // inclusive
  if (last < first) {
    throw ValidationError("training split of " + std::to_string(train.size()) +
                          " days is too short for " + std::to_string(episode_length) + "-day episodes");
  }
  return {first, last + 1};
}

DayRange validation_window(const Dataset& dataset, const EnvConfig& config, int days) {
  const DayRange v = dataset.split().validation;
  const int begin = std::max({v.begin, 1, config.price_stat_window});
  const DayRange window{begin, std::min(v.end, begin + days)};
  if (window.empty()) throw ValidationError("validation split is empty");
  return window;
}

DayRange test_window(const Dataset& dataset, int days) {
  const DayRange t = dataset.split().test;
  const int begin = std::max(t.begin, 1);
  const DayRange window{begin, std::min(t.end, begin + days)};
  if (window.empty()) throw ValidationError("test split is empty");
  return window;
}

PolicyParams make_initial_policy(const Dataset& dataset, const EnvConfig& env_config, const A2cConfig& config) {
  PolicyParams policy = PolicyParams::create(observation_size(config.include_weather), config.net_arch,
                                             config.log_std_init, derive_seed(config.seed, Stream::kInit));
  const ObservationScales scales = observation_scales(dataset, env_config);
  policy.normalization.price_scale = scales.price;
  policy.normalization.consumption_scale = scales.consumption;
  policy.normalization.max_wind_speed = env_config.max_wind_speed;
  policy.normalization.temperature_min = env_config.temperature_min;
  policy.normalization.temperature_max = env_config.temperature_max;
  policy.normalization.include_weather = config.include_weather;
  return policy;
}

TrainingRun a2c_train(std::shared_ptr<const Dataset> dataset, const EnvConfig& env_config, PolicyParams policy,
                      const A2cConfig& config, const ProgressCallback& progress) {
  validate(config);
  if (policy.input_size() != observation_size(config.include_weather)) {
    throw ValidationError("policy input size does not match the observation layout");
  }
  MarketEnv env(dataset, env_config, config.include_weather);
  const DayRange starts = training_start_days(*dataset, env_config, config.episode_length);

  TrainingRun run;
  run.seed = config.seed;
  run.validation_range = validation_window(*dataset, env_config, config.validation_days);
  run.test_range = test_window(*dataset, config.test_days);
  run.best_policy = policy;

  Rng windows = make_rng(config.seed, Stream::kWindows);
  Rng exploration = make_rng(config.seed, Stream::kPolicyNoise);
  std::uniform_int_distribution<int> pick_start(starts.begin, starts.end - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  RmsPropState optimizer;

  const PriceAnchors anchors(*dataset, env_config.price_stat_window);
  const std::uint64_t validation_seed = derive_seed(config.seed, kValidationStream);
  bool have_best = false;

  auto evaluate_now = [&](long step) {
    const PolicyStrategy strategy(std::make_shared<const PolicyParams>(policy), true);
    EvaluationOptions options;
    options.anchors = &anchors;
    const double reward =
        evaluate_strategy(strategy, *dataset, run.validation_range, env_config, validation_seed, options).total;
    EvalPoint point{step, reward, !have_best || reward > run.best_val_reward};
    if (point.is_best) {
      have_best = true;
      run.best_val_reward = reward;
      run.best_step = step;
      run.best_policy = policy;
    }
    run.log.push_back(point);
    if (progress) progress(point);
  };

  auto start_episode = [&]() {
    const int first_delivery = pick_start(windows);
    const std::uint64_t episode_seed = windows();
    return env.reset(first_delivery - 1, episode_seed);
  };

  const int obs_size = env.observation_size();
  Observation obs = start_episode();
  int episode_step = 0;
  long steps_done = 0;
  long next_eval = config.eval_frequency;
  std::array<double, kActionSize> xi{};

  while (steps_done < config.total_timesteps) {
    const int n = static_cast<int>(std::min<long>(config.n_steps, config.total_timesteps - steps_done));
    Rollout rollout;
    rollout.observations.resize(obs_size, n);
    rollout.raw_actions.resize(kActionSize, n);
    rollout.rewards.resize(static_cast<std::size_t>(n));
    rollout.values.resize(static_cast<std::size_t>(n));
    rollout.episode_end.resize(static_cast<std::size_t>(n));
    bool ended = false;
    for (int t = 0; t < n; ++t) {
      const Eigen::Map<const Eigen::VectorXd> s(obs.data(), obs_size);
      rollout.observations.col(t) = s;
      rollout.values[static_cast<std::size_t>(t)] = policy.critic.forward(Eigen::VectorXd(s))[0];
      for (double& v : xi) v = normal(exploration);
      const ActionSample sample = sample_action(policy, obs, xi);
      rollout.raw_actions.col(t) = sample.raw;
      const StepOutcome out = env.step(blackbox_bids(sample.action, env.max_volume(), env.next_price_anchors()));
      rollout.rewards[static_cast<std::size_t>(t)] = out.reward / config.reward_scale;
      ++steps_done;
      ++episode_step;
      ended = out.terminal || episode_step >= config.episode_length;
      rollout.episode_end[static_cast<std::size_t>(t)] = ended ? 1 : 0;
      if (ended) {
        obs = start_episode();
        episode_step = 0;
      } else {
        obs = out.observation;
      }
    }
    rollout.last_value = 0.0;
    if (!ended) {
      const Eigen::Map<const Eigen::VectorXd> s(obs.data(), obs_size);
      rollout.last_value = policy.critic.forward(Eigen::VectorXd(s))[0];
    }
    a2c_update(policy, rollout, config, optimizer);
    ++run.updates;
    if (steps_done >= next_eval) {
      evaluate_now(steps_done);
      while (next_eval <= steps_done) next_eval += config.eval_frequency;
    }
  }
  if (run.log.empty() || run.log.back().step != steps_done) evaluate_now(steps_done);

  const PolicyStrategy best(std::make_shared<const PolicyParams>(run.best_policy), true);
  EvaluationOptions options;
  options.anchors = &anchors;
  options.keep_days = true;
  EvaluationResult test = evaluate_strategy(best, *dataset, run.test_range, env_config, config.seed, options);
  run.test_total = test.total;
  run.test_days = std::move(test.days);
  return run;
}

void write_training_log(const std::filesystem::path& path, std::span<const EvalPoint> log) {
  auto out = csv::open_output(path);
  out << "step,val_reward,is_best\n";
  for (const auto& p : log) out << p.step << ',' << csv::format(p.val_reward) << ',' << (p.is_best ? 1 : 0) << '\n';
}

}  // namespace dabid
