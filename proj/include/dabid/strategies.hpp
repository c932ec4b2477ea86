#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dabid/market_env.hpp"
#include "dabid/neuralnet.hpp"

namespace dabid {

// Timing strategy: buy at 0-3 am at any price, sell at 5-8 pm at any price.
struct TimingParams {
  double volume_scale = 1.0;       // alpha_1, MWh
  double level_sensitivity = 0.0;  // alpha_2, MWh
};

inline constexpr int kOpportunisticParamCount = 100;

struct OpportunisticParams {
  // alpha_1..alpha_100 stored 0-based: alpha[k - 1] is alpha_k.
  std::array<double, kOpportunisticParamCount> alpha{};

  double& coefficient(int k) { return alpha[static_cast<std::size_t>(k - 1)]; }
  double coefficient(int k) const { return alpha[static_cast<std::size_t>(k - 1)]; }
};

inline constexpr double kActionLimit = 3.0;

// Rows: buy log-volume, buy log-price, sell log-volume, sell log-price; one
// column per delivery hour. Row-major flattening gives the policy's 96 outputs.
using ActionMatrix = Eigen::Matrix<double, 4, kHoursPerDay, Eigen::RowMajor>;

inline constexpr std::array<int, 4> kTimingBuyHours = {0, 1, 2, 3};
inline constexpr std::array<int, 4> kTimingSellHours = {17, 18, 19, 20};

BidSet timing_bids(const TimingParams& params, double estimated_level);
BidSet opportunistic_bids(const OpportunisticParams& params, double estimated_level, double max_volume,
                          std::span<const double, kHoursPerDay> price_anchors);
BidSet blackbox_bids(const ActionMatrix& action, double max_volume,
                     std::span<const double, kHoursPerDay> price_anchors);

struct ActionSample {
  ActionMatrix action;      // clipped to [-3, 3]
  Eigen::VectorXd raw;      // pre-clip Gaussian sample
  Eigen::VectorXd mean;     // g1(s)
  double log_probability = 0.0;  // of `raw` under N(mean, diag(exp(2 log_std)))
};

// a = g1(s) + xi * exp(g2), clipped elementwise to [-3, 3].
ActionSample sample_action(const PolicyParams& policy, std::span<const double> observation,
                           std::span<const double> noise);

double diagonal_gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& log_std);

ActionMatrix clip_action(const Eigen::VectorXd& raw);

// Everything a strategy may look at when bidding for the next delivery day.
struct DecisionContext {
  std::span<const double> observation;
  double estimated_level = 0.0;  // relative charge at midnight
  double max_volume = 0.0;       // v-bar
  std::span<const double, kHoursPerDay> price_anchors;  // p-bar per hour
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  // `noise` is only consumed by stochastic strategies.
  virtual BidSet decide(const DecisionContext& context, Rng& noise) const = 0;
};

class TimingStrategy final : public Strategy {
 public:
  explicit TimingStrategy(TimingParams params) : params_(params) {}
  BidSet decide(const DecisionContext& context, Rng& noise) const override;

 private:
  TimingParams params_;
};

class OpportunisticStrategy final : public Strategy {
 public:
  explicit OpportunisticStrategy(OpportunisticParams params) : params_(params) {}
  BidSet decide(const DecisionContext& context, Rng& noise) const override;

 private:
  OpportunisticParams params_;
};

// Black-box neural strategy; deterministic mode bids the mean action.
class PolicyStrategy final : public Strategy {
 public:
  PolicyStrategy(std::shared_ptr<const PolicyParams> policy, bool deterministic)
      : policy_(std::move(policy)), deterministic_(deterministic) {}
  BidSet decide(const DecisionContext& context, Rng& noise) const override;
  const PolicyParams& policy() const { return *policy_; }
  bool deterministic() const { return deterministic_; }

 private:
  std::shared_ptr<const PolicyParams> policy_;
  bool deterministic_;
};

// The untrained baseline: every action coordinate zero.
class ZeroActionStrategy final : public Strategy {
 public:
  BidSet decide(const DecisionContext& context, Rng& noise) const override;
};

enum class StrategyKind { kTiming, kOpportunistic, kBlackBox, kZeroAction };

std::string to_string(StrategyKind kind);
StrategyKind parse_strategy_kind(const std::string& text);

// JSON document `{"strategy_kind": ..., "params": [...], "policy_file": ...}`.
struct StrategyDocument {
  StrategyKind kind = StrategyKind::kTiming;
  std::vector<double> params;
  std::string policy_file;  // black-box only, relative to the document
};

std::string strategy_to_json(const StrategyDocument& document);
StrategyDocument strategy_from_json(const std::string& text);
void save_strategy(const StrategyDocument& document, const std::filesystem::path& path);
StrategyDocument load_strategy(const std::filesystem::path& path);

TimingParams timing_params_from(std::span<const double> values);
OpportunisticParams opportunistic_params_from(std::span<const double> values);

std::unique_ptr<Strategy> make_strategy(const StrategyDocument& document,
                                        const std::filesystem::path& base_dir = {});

}  // namespace dabid
