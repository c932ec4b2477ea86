#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dabid/common.hpp"
#include "dabid/datahub.hpp"

namespace dabid {

// Prosumer and market settings. Key names in the flat config file match the
// member names.
struct EnvConfig {
  double battery_capacity = 2.0;     // MWh
  double battery_efficiency = 0.85;  // applied on charge
  double max_solar_generation = 0.4;  // MWh
  double solar_efficiency = 0.2;
  double max_wind_generation = 0.05;  // MWh
  double max_wind_speed = 11.0;       // m/s
  int households = 100;
  double consumption_noise_std = 0.03;
  int action_hour = 10;
  int action_minute = 30;
  int price_stat_window = 28;  // days
  double penalty_buy_multiplier = 2.0;
  double penalty_sell_multiplier = 0.5;
  double initial_relative_charge = 0.5;
  // Observation price normalizer; <= 0 resolves to the training-split mean price.
  double price_scale = 0.0;
  double temperature_min = -20.0;
  double temperature_max = 40.0;
};

void validate(const EnvConfig& config);

// Reads the keys it knows from a flat key-value map; other keys are ignored.
void apply_overrides(EnvConfig& config, const std::map<std::string, std::string>& values);
std::map<std::string, std::string> to_key_values(const EnvConfig& config);

enum class BidType { kBuy, kSell };

inline constexpr double kAlwaysBuyPrice = std::numeric_limits<double>::infinity();
inline constexpr double kAlwaysSellPrice = 0.0;

struct Bid {
  double volume = 0.0;  // MWh, multiple of 0.1; 0 means no bid
  double price = 0.0;   // currency / MWh, or +inf
  BidType type = BidType::kBuy;
  int hour = 0;
};

// The 48 bid slots (one buy and one sell per hour) of a delivery day.
struct BidSet {
  struct Slot {
    double volume = 0.0;
    double price = 0.0;
  };
  std::array<Slot, kHoursPerDay> buy{};
  std::array<Slot, kHoursPerDay> sell{};

  // Bids with nonzero volume, buys first, by hour.
  std::vector<Bid> bids() const;
};

bool clear_bid(const Bid& bid, double clearing_price);

// Eq. n * E_avg * |1 + rho|.
double hourly_consumption(const EnvConfig& config, double avg_per_household, double rho);
double hourly_solar(const EnvConfig& config, int cloudiness);
double hourly_wind(const EnvConfig& config, double wind_speed);
// Largest hourly production: clear sky plus wind at the cut-off speed.
double max_hourly_production(const EnvConfig& config);

// Median of the prices at `hour` over the `window` days before `day_index`
// (fewer during warm-up). Even counts average the two middle values.
double rolling_hourly_price_stat(const Dataset& dataset, int hour, int day_index, int window);
std::array<double, kHoursPerDay> rolling_price_stats(const Dataset& dataset, int day_index, int window);

// Cached per-day price anchors for repeated evaluation over one dataset.
class PriceAnchors {
 public:
  PriceAnchors(const Dataset& dataset, int window);
  std::span<const double, kHoursPerDay> for_day(int day_index) const;

 private:
  std::vector<double> table_;
};

struct HourOutcome {
  double price = 0.0;
  double production = 0.0;
  double consumption = 0.0;
  double buy_executed = 0.0;
  double sell_executed = 0.0;
  double charge_input = 0.0;  // energy sent into the battery
  double stored = 0.0;        // energy added to the battery
  double discharge = 0.0;
  double unscheduled_buy = 0.0;
  double unscheduled_sell = 0.0;
  double battery_level = 0.0;  // after the hour
  double cash_delta = 0.0;
};

struct HourInputs {
  double price = 0.0;
  double production = 0.0;
  double consumption = 0.0;
  double buy_volume = 0.0;  // accepted volumes
  double sell_volume = 0.0;
};

// Nets flows, then charges (eta on input) or discharges (1:1) the battery;
// what remains goes to the operator at the penalty prices.
HourOutcome settle_hour(const EnvConfig& config, double battery_level, const HourInputs& inputs);

struct DayResult {
  int day = 0;  // delivery day index
  double reward = 0.0;
  BidSet bids;
  std::array<HourOutcome, kHoursPerDay> hours{};
  std::array<double, kHoursPerDay + 1> battery_trace{};

  std::vector<Bid> executed_bids() const;
  std::array<double, kHoursPerDay> unscheduled_buys() const;
  std::array<double, kHoursPerDay> unscheduled_sells() const;
};

// State at the decision time (action_hour:action_minute) of `day`.
struct EnvState {
  int day = 0;
  // Battery levels at the hour boundaries of `day`; the entry at action_hour is
  // the current level, the last entry the actual level at midnight.
  std::array<double, kHoursPerDay + 1> day_trace{};
  BidSet today_bids;  // bids being delivered on `day`
  double cash = 0.0;
  Rng rng;

  double battery_charge(const EnvConfig& config) const { return day_trace[config.action_hour]; }
};

using Observation = std::vector<double>;

inline constexpr int kObservationSizeWithWeather = 141;
inline constexpr int kObservationSizeNoWeather = 69;

inline int observation_size(bool include_weather) {
  return include_weather ? kObservationSizeWithWeather : kObservationSizeNoWeather;
}

// Runs all 24 hours of `day` with the given bids from its midnight level,
// drawing one consumption noise value per hour from `rng`.
DayResult simulate_day(Rng& rng, const BidSet& bids, int day, double start_level, const Dataset& dataset,
                       const EnvConfig& config);

// Initial state for a decision on `decision_day`: the battery starts the day at
// initial_relative_charge and the day runs without bids.
EnvState reset_state(int decision_day, const Dataset& dataset, const EnvConfig& config, std::uint64_t seed);

double estimate_midnight_level(const EnvState& state, const Dataset& dataset, const EnvConfig& config);

struct ObservationScales {
  double price = 1.0;
  double consumption = 1.0;
};

ObservationScales observation_scales(const Dataset& dataset, const EnvConfig& config);

Observation build_observation(const EnvState& state, const Dataset& dataset, const EnvConfig& config,
                              bool include_weather);
Observation build_observation(const EnvState& state, const Dataset& dataset, const EnvConfig& config,
                              bool include_weather, const ObservationScales& scales);

// Delivers day state.day + 1 with `bids` and moves the decision point to that
// day, without building an observation. Requires the delivery day to exist.
DayResult advance_day(EnvState& state, const BidSet& bids, const Dataset& dataset, const EnvConfig& config);

struct StepOutcome {
  Observation observation;  // empty when terminal
  double reward = 0.0;
  DayResult result;
  bool terminal = false;
};

// Delivers day state.day + 1 with `bids` and advances the decision point by a
// day. Terminal (without simulation) when the delivery day is past the data;
// terminal after simulation when the next decision has no next-day data.
StepOutcome step_day(EnvState& state, const BidSet& bids, const Dataset& dataset, const EnvConfig& config,
                     bool include_weather);

double reference_balance(const Dataset& dataset, const EnvConfig& config, DayRange days);

// Gym-style wrapper owning the state; shares the read-only dataset.
class MarketEnv {
 public:
  MarketEnv(std::shared_ptr<const Dataset> dataset, EnvConfig config, bool include_weather);

  Observation reset(int decision_day, std::uint64_t seed);
  StepOutcome step(const BidSet& bids);

  const EnvState& state() const { return state_; }
  const Dataset& dataset() const { return *dataset_; }
  const EnvConfig& config() const { return config_; }
  bool include_weather() const { return include_weather_; }
  int observation_size() const { return dabid::observation_size(include_weather_); }
  double estimated_midnight_level() const;
  // Price anchors for bids on the next delivery day.
  std::span<const double, kHoursPerDay> next_price_anchors() const;
  double max_volume() const { return max_hourly_production(config_); }
  const ObservationScales& scales() const { return scales_; }

 private:
  std::shared_ptr<const Dataset> dataset_;
  EnvConfig config_;
  bool include_weather_;
  ObservationScales scales_;
  std::shared_ptr<const PriceAnchors> anchors_;
  EnvState state_;
};

// `day,hour,price,buy_exec,sell_exec,uns_buy,uns_sell,battery_level,cash_delta`
void write_day_results(const std::filesystem::path& path, std::span<const DayResult> days);
// `day,hour,price,buy_volume,buy_price,sell_volume,sell_price`
void write_bid_log(const std::filesystem::path& path, std::span<const DayResult> days);

}  // namespace dabid
