#include "dabid/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace dabid {

BidSet timing_bids(const TimingParams& params, double estimated_level) {
  const double buy = std::max(0.0, (params.volume_scale - params.level_sensitivity * estimated_level) / 4.0);
  const double sell = std::max(0.0, (params.volume_scale + params.level_sensitivity * estimated_level) / 4.0);
  BidSet bids;
  for (int h : kTimingBuyHours) bids.buy[h] = {round_volume(buy), kAlwaysBuyPrice};
  for (int h : kTimingSellHours) bids.sell[h] = {round_volume(sell), kAlwaysSellPrice};
  return bids;
}

BidSet opportunistic_bids(const OpportunisticParams& params, double estimated_level, double max_volume,
                          std::span<const double, kHoursPerDay> price_anchors) {
  const double l = estimated_level;
  BidSet bids;
  for (int h = 0; h < kHoursPerDay; ++h) {
    const double p = price_anchors[h];
    bids.buy[h] = {round_volume(max_volume * std::exp(params.coefficient(4 * h + 5) + params.coefficient(1) * l)),
                   p * std::exp(params.coefficient(4 * h + 7) + params.coefficient(3) * l)};
    bids.sell[h] = {round_volume(max_volume * std::exp(params.coefficient(4 * h + 6) + params.coefficient(2) * l)),
                    p * std::exp(params.coefficient(4 * h + 8) + params.coefficient(4) * l)};
  }
  return bids;
}

BidSet blackbox_bids(const ActionMatrix& action, double max_volume,
                     std::span<const double, kHoursPerDay> price_anchors) {
  BidSet bids;
  for (int h = 0; h < kHoursPerDay; ++h) {
    const double p = price_anchors[h];
    bids.buy[h] = {round_volume(max_volume * std::exp(action(0, h))), p * std::exp(action(1, h))};
    bids.sell[h] = {round_volume(max_volume * std::exp(action(2, h))), p * std::exp(action(3, h))};
  }
  return bids;
}

double diagonal_gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& log_std) {
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const Eigen::ArrayXd z = (x - mean).array() / log_std.array().exp();
  return (-0.5 * z.square() - log_std.array() - half_log_two_pi).sum();
}

ActionMatrix clip_action(const Eigen::VectorXd& raw) {
  if (raw.size() != kActionSize) {
    throw ValidationError("action vector must have 96 entries");
  }
  ActionMatrix a;
  for (int i = 0; i < kActionSize; ++i) a(i / kHoursPerDay, i % kHoursPerDay) = std::clamp(raw[i], -kActionLimit, kActionLimit);
  return a;
}

ActionSample sample_action(const PolicyParams& policy, std::span<const double> observation,
                           std::span<const double> noise) {
  if (static_cast<int>(observation.size()) != policy.input_size()) {
    throw ValidationError("observation has " + std::to_string(observation.size()) + " values, policy expects " +
                          std::to_string(policy.input_size()));
  }
  if (noise.size() != static_cast<std::size_t>(kActionSize)) {
    throw ValidationError("sample_action needs 96 noise values");
  }
  const Eigen::Map<const Eigen::VectorXd> obs(observation.data(), static_cast<Eigen::Index>(observation.size()));
  const Eigen::Map<const Eigen::VectorXd> xi(noise.data(), kActionSize);
  ActionSample s;
  s.mean = policy.actor.forward(Eigen::VectorXd(obs));
  s.raw = s.mean + xi.cwiseProduct(policy.log_std.array().exp().matrix());
  s.action = clip_action(s.raw);
  s.log_probability = diagonal_gaussian_log_prob(s.raw, s.mean, policy.log_std);
  return s;
}

BidSet TimingStrategy::decide(const DecisionContext& context, Rng&) const {
  return timing_bids(params_, context.estimated_level);
}

BidSet OpportunisticStrategy::decide(const DecisionContext& context, Rng&) const {
  return opportunistic_bids(params_, context.estimated_level, context.max_volume, context.price_anchors);
}

BidSet PolicyStrategy::decide(const DecisionContext& context, Rng& noise) const {
  std::array<double, kActionSize> xi{};
  if (!deterministic_) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : xi) v = normal(noise);
  }
  const ActionSample s = sample_action(*policy_, context.observation, xi);
  return blackbox_bids(s.action, context.max_volume, context.price_anchors);
}

BidSet ZeroActionStrategy::decide(const DecisionContext& context, Rng&) const {
  return blackbox_bids(ActionMatrix::Zero(), context.max_volume, context.price_anchors);
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kTiming:
      return "timing";
    case StrategyKind::kOpportunistic:
      return "opportunistic";
    case StrategyKind::kBlackBox:
      return "blackbox";
    case StrategyKind::kZeroAction:
      return "zero_action";
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(const std::string& text) {
  for (auto kind : {StrategyKind::kTiming, StrategyKind::kOpportunistic, StrategyKind::kBlackBox,
                    StrategyKind::kZeroAction}) {
    if (to_string(kind) == text) return kind;
  }
  throw ValidationError("unknown strategy kind '" + text + "'");
}

std::string strategy_to_json(const StrategyDocument& document) {
  nlohmann::json j = {{"strategy_kind", to_string(document.kind)}, {"params", document.params}};
  if (!document.policy_file.empty()) j["policy_file"] = document.policy_file;
  return j.dump(2);
}

StrategyDocument strategy_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    StrategyDocument doc;
    doc.kind = parse_strategy_kind(j.at("strategy_kind").get<std::string>());
    if (j.contains("params")) doc.params = j.at("params").get<std::vector<double>>();
    if (j.contains("policy_file")) doc.policy_file = j.at("policy_file").get<std::string>();
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("strategy document: ") + e.what());
  }
}

void save_strategy(const StrategyDocument& document, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << strategy_to_json(document) << '\n';
}

StrategyDocument load_strategy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open strategy file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return strategy_from_json(buffer.str());
}

TimingParams timing_params_from(std::span<const double> values) {
  if (values.size() != 2) throw ValidationError("timing strategy has exactly 2 parameters");
  return {values[0], values[1]};
}

OpportunisticParams opportunistic_params_from(std::span<const double> values) {
  if (values.size() != kOpportunisticParamCount) {
    throw ValidationError("opportunistic strategy has exactly 100 parameters");
  }
  OpportunisticParams p;
  std::copy(values.begin(), values.end(), p.alpha.begin());
  return p;
}

std::unique_ptr<Strategy> make_strategy(const StrategyDocument& document, const std::filesystem::path& base_dir) {
  switch (document.kind) {
    case StrategyKind::kTiming:
      return std::make_unique<TimingStrategy>(timing_params_from(document.params));
    case StrategyKind::kOpportunistic:
      return std::make_unique<OpportunisticStrategy>(opportunistic_params_from(document.params));
    case StrategyKind::kZeroAction:
      return std::make_unique<ZeroActionStrategy>();
    case StrategyKind::kBlackBox: {
      if (document.policy_file.empty()) throw ValidationError("black-box strategy needs a policy_file");
      auto policy = std::make_shared<const PolicyParams>(load_policy(base_dir / document.policy_file));
      return std::make_unique<PolicyStrategy>(std::move(policy), true);
    }
  }
  throw ValidationError("unsupported strategy kind");
}

}  // namespace dabid
