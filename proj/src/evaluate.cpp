#include <optional>

#include "dabid/optimizers.hpp"

namespace dabid {

EvaluationResult evaluate_strategy(const Strategy& strategy, const Dataset& dataset, DayRange range,
                                   const EnvConfig& config, std::uint64_t seed, const EvaluationOptions& options) {
  if (range.begin < 1 || range.end > dataset.num_days() || range.empty()) {
    throw ValidationError("evaluation range [" + std::to_string(range.begin) + ", " + std::to_string(range.end) +
                          ") does not fit a dataset of " + std::to_string(dataset.num_days()) + " days");
  }

  // Policies carry their own input constants.
  const auto* policy_strategy = dynamic_cast<const PolicyStrategy*>(&strategy);
  bool include_weather = options.include_weather;
  ObservationScales scales = options.scales ? *options.scales : observation_scales(dataset, config);
  if (policy_strategy) {
    const auto& n = policy_strategy->policy().normalization;
    include_weather = n.include_weather;
    scales.price = n.price_scale;
    scales.consumption = n.consumption_scale;
  }

  std::optional<PriceAnchors> own_anchors;
  const PriceAnchors* anchors = options.anchors;
  if (!anchors) {
    own_anchors.emplace(dataset, config.price_stat_window);
    anchors = &*own_anchors;
  }

  EnvState state = reset_state(range.begin - 1, dataset, config, derive_seed(seed, Stream::kConsumption));
  Rng noise = make_rng(seed, Stream::kPolicyNoise);
  const double max_volume = max_hourly_production(config);

  EvaluationResult result;
  if (options.keep_days) result.days.reserve(static_cast<std::size_t>(range.size()));
  Observation obs;
  for (int day = range.begin; day < range.end; ++day) {
    if (policy_strategy) obs = build_observation(state, dataset, config, include_weather, scales);
    const DecisionContext context{obs, estimate_midnight_level(state, dataset, config), max_volume,
                                  anchors->for_day(day)};
    const BidSet bids = strategy.decide(context, noise);
    DayResult day_result = advance_day(state, bids, dataset, config);
    result.total += day_result.reward;
    if (options.keep_days) result.days.push_back(std::move(day_result));
  }
  return result;
}

}  // namespace dabid
