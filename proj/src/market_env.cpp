#include "dabid/market_env.hpp"

#include <algorithm>
#include <cmath>

#include "csv.hpp"
#include "kv.hpp"

namespace dabid {

void validate(const EnvConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("invalid environment config: ") + what);
  };
  require(c.battery_capacity > 0.0, "battery_capacity must be positive");
  require(c.battery_efficiency > 0.0 && c.battery_efficiency <= 1.0, "battery_efficiency must be in (0, 1]");
  require(c.max_solar_generation >= 0.0, "max_solar_generation must be nonnegative");
  require(c.solar_efficiency > 0.0 && c.solar_efficiency <= 1.0, "solar_efficiency must be in (0, 1]");
  require(c.max_wind_generation >= 0.0, "max_wind_generation must be nonnegative");
  require(c.max_wind_speed > 0.0, "max_wind_speed must be positive");
  require(c.households >= 0, "households must be nonnegative");
  require(c.consumption_noise_std >= 0.0, "consumption_noise_std must be nonnegative");
  require(c.action_hour >= 0 && c.action_hour < kHoursPerDay, "action_hour must be 0..23");
  require(c.action_minute >= 0 && c.action_minute < 60, "action_minute must be 0..59");
  require(c.price_stat_window >= 1, "price_stat_window must be at least 1");
  require(c.penalty_buy_multiplier >= 0.0 && c.penalty_sell_multiplier >= 0.0, "penalty multipliers must be >= 0");
  require(c.initial_relative_charge >= 0.0 && c.initial_relative_charge <= 1.0,
          "initial_relative_charge must be in [0, 1]");
  require(c.temperature_max > c.temperature_min, "temperature_max must exceed temperature_min");
}

void apply_overrides(EnvConfig& c, const std::map<std::string, std::string>& values) {
  kv::read(values, "battery_capacity", c.battery_capacity);
  kv::read(values, "battery_efficiency", c.battery_efficiency);
  kv::read(values, "max_solar_generation", c.max_solar_generation);
  kv::read(values, "solar_efficiency", c.solar_efficiency);
  kv::read(values, "max_wind_generation", c.max_wind_generation);
  kv::read(values, "max_wind_speed", c.max_wind_speed);
  kv::read(values, "households", c.households);
  kv::read(values, "consumption_noise_std", c.consumption_noise_std);
  kv::read(values, "action_hour", c.action_hour);
  kv::read(values, "action_minute", c.action_minute);
  kv::read(values, "price_stat_window", c.price_stat_window);
  kv::read(values, "penalty_buy_multiplier", c.penalty_buy_multiplier);
  kv::read(values, "penalty_sell_multiplier", c.penalty_sell_multiplier);
  kv::read(values, "initial_relative_charge", c.initial_relative_charge);
  kv::read(values, "price_scale", c.price_scale);
  kv::read(values, "temperature_min", c.temperature_min);
  kv::read(values, "temperature_max", c.temperature_max);
  validate(c);
}

std::map<std::string, std::string> to_key_values(const EnvConfig& c) {
  return {
      {"battery_capacity", csv::format(c.battery_capacity)},
      {"battery_efficiency", csv::format(c.battery_efficiency)},
      {"max_solar_generation", csv::format(c.max_solar_generation)},
      {"solar_efficiency", csv::format(c.solar_efficiency)},
      {"max_wind_generation", csv::format(c.max_wind_generation)},
      {"max_wind_speed", csv::format(c.max_wind_speed)},
      {"households", std::to_string(c.households)},
      {"consumption_noise_std", csv::format(c.consumption_noise_std)},
      {"action_hour", std::to_string(c.action_hour)},
      {"action_minute", std::to_string(c.action_minute)},
      {"price_stat_window", std::to_string(c.price_stat_window)},
      {"penalty_buy_multiplier", csv::format(c.penalty_buy_multiplier)},
      {"penalty_sell_multiplier", csv::format(c.penalty_sell_multiplier)},
      {"initial_relative_charge", csv::format(c.initial_relative_charge)},
      {"price_scale", csv::format(c.price_scale)},
      {"temperature_min", csv::format(c.temperature_min)},
      {"temperature_max", csv::format(c.temperature_max)},
  };
}

std::vector<Bid> BidSet::bids() const {
  std::vector<Bid> out;
  for (int h = 0; h < kHoursPerDay; ++h) {
    if (buy[h].volume > 0.0) out.push_back({buy[h].volume, buy[h].price, BidType::kBuy, h});
  }
  for (int h = 0; h < kHoursPerDay; ++h) {
    if (sell[h].volume > 0.0) out.push_back({sell[h].volume, sell[h].price, BidType::kSell, h});
  }
  return out;
}

bool clear_bid(const Bid& bid, double clearing_price) {
  if (!(bid.volume > 0.0)) return false;
  return bid.type == BidType::kBuy ? bid.price >= clearing_price : bid.price <= clearing_price;
}

double hourly_consumption(const EnvConfig& config, double avg_per_household, double rho) {
  return config.households * avg_per_household * std::fabs(1.0 + rho);
}

double hourly_solar(const EnvConfig& config, int cloudiness) {
  if (cloudiness < 0 || cloudiness > kMaxOktas) {
    throw ValidationError("cloudiness " + std::to_string(cloudiness) + " outside 0..8 Oktas");
  }
  return config.max_solar_generation * (1.0 - cloudiness / 8.0) * config.solar_efficiency;
}

double hourly_wind(const EnvConfig& config, double wind_speed) {
  if (wind_speed > config.max_wind_speed) return 0.0;
  return config.max_wind_generation * (wind_speed / config.max_wind_speed);
}

double max_hourly_production(const EnvConfig& config) {
  return config.max_solar_generation * config.solar_efficiency + config.max_wind_generation;
}

double rolling_hourly_price_stat(const Dataset& dataset, int hour, int day_index, int window) {
  if (day_index <= 0) {
    throw ValidationError("no price history before day 0; start episodes after a warm-up period");
  }
  if (day_index > dataset.num_days()) {
    throw ValidationError("day index beyond dataset");
  }
  const int first = std::max(0, day_index - window);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(day_index - first));
  for (int d = first; d < day_index; ++d) values.push_back(dataset.price(d, hour));
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::array<double, kHoursPerDay> rolling_price_stats(const Dataset& dataset, int day_index, int window) {
  std::array<double, kHoursPerDay> out{};
  for (int h = 0; h < kHoursPerDay; ++h) out[h] = rolling_hourly_price_stat(dataset, h, day_index, window);
  return out;
}

PriceAnchors::PriceAnchors(const Dataset& dataset, int window) {
  const int n = dataset.num_days();
  table_.assign(static_cast<std::size_t>(n + 1) * kHoursPerDay, 0.0);
  for (int d = 1; d <= n; ++d) {
    const auto stats = rolling_price_stats(dataset, d, window);
    std::copy(stats.begin(), stats.end(), table_.begin() + static_cast<std::ptrdiff_t>(d) * kHoursPerDay);
  }
}

std::span<const double, kHoursPerDay> PriceAnchors::for_day(int day_index) const {
  if (day_index <= 0 || static_cast<std::size_t>(day_index + 1) * kHoursPerDay > table_.size()) {
    throw ValidationError("no price anchors for day " + std::to_string(day_index));
  }
  return std::span<const double, kHoursPerDay>(table_.data() + static_cast<std::size_t>(day_index) * kHoursPerDay,
                                               kHoursPerDay);
}

HourOutcome settle_hour(const EnvConfig& config, double battery_level, const HourInputs& in) {
  HourOutcome out;
  out.price = in.price;
  out.production = in.production;
  out.consumption = in.consumption;
  out.buy_executed = in.buy_volume;
  out.sell_executed = in.sell_volume;

  const double capacity = config.battery_capacity;
  const double eta = config.battery_efficiency;
  const double net = in.production + in.buy_volume - in.consumption - in.sell_volume;
  double level = battery_level;
  if (net > 0.0) {
    const double room = capacity - level;
    if (eta * net >= room) {
      out.charge_input = room / eta;
      out.stored = room;
      level = capacity;
    } else {
      out.charge_input = net;
      out.stored = eta * net;
      level = std::min(capacity, level + out.stored);
    }
    out.unscheduled_sell = net - out.charge_input;
  } else if (net < 0.0) {
    const double deficit = -net;
    out.discharge = std::min(deficit, level);
    level = deficit >= battery_level ? 0.0 : level - out.discharge;
    out.unscheduled_buy = deficit - out.discharge;
  }
  out.battery_level = level;
  out.cash_delta = in.sell_volume * in.price - in.buy_volume * in.price +
                   out.unscheduled_sell * config.penalty_sell_multiplier * in.price -
                   out.unscheduled_buy * config.penalty_buy_multiplier * in.price;
  return out;
}

std::vector<Bid> DayResult::executed_bids() const {
  std::vector<Bid> out;
  for (const Bid& bid : bids.bids()) {
    if (clear_bid(bid, hours[bid.hour].price)) out.push_back(bid);
  }
  return out;
}

std::array<double, kHoursPerDay> DayResult::unscheduled_buys() const {
  std::array<double, kHoursPerDay> out{};
  for (int h = 0; h < kHoursPerDay; ++h) out[h] = hours[h].unscheduled_buy;
  return out;
}

std::array<double, kHoursPerDay> DayResult::unscheduled_sells() const {
  std::array<double, kHoursPerDay> out{};
  for (int h = 0; h < kHoursPerDay; ++h) out[h] = hours[h].unscheduled_sell;
  return out;
}

namespace {

double accepted_volume(const BidSet::Slot& slot, BidType type, int hour, double price) {
  return clear_bid(Bid{slot.volume, slot.price, type, hour}, price) ? slot.volume : 0.0;
}

}  // namespace

DayResult simulate_day(Rng& rng, const BidSet& bids, int day, double start_level, const Dataset& dataset,
                       const EnvConfig& config) {
  DayResult result;
  result.day = day;
  result.bids = bids;
  result.battery_trace[0] = start_level;
  std::normal_distribution<double> noise(0.0, 1.0);
  double level = start_level;
  for (int h = 0; h < kHoursPerDay; ++h) {
    const auto& record = dataset.at(day, h);
    const double rho = config.consumption_noise_std * noise(rng);
    HourInputs in;
    in.price = record.price;
    in.production = hourly_solar(config, record.cloudiness) + hourly_wind(config, record.wind_speed);
    in.consumption = hourly_consumption(config, dataset.profile.avg_per_household[h], rho);
    in.buy_volume = accepted_volume(bids.buy[h], BidType::kBuy, h, record.price);
    in.sell_volume = accepted_volume(bids.sell[h], BidType::kSell, h, record.price);
    result.hours[h] = settle_hour(config, level, in);
    level = result.hours[h].battery_level;
    result.battery_trace[h + 1] = level;
    result.reward += result.hours[h].cash_delta;
  }
  return result;
}

EnvState reset_state(int decision_day, const Dataset& dataset, const EnvConfig& config, std::uint64_t seed) {
  validate(config);
  if (decision_day < 0 || decision_day >= dataset.num_days()) {
    throw ValidationError("decision day " + std::to_string(decision_day) + " outside dataset");
  }
  EnvState state;
  state.day = decision_day;
  state.rng = Rng(seed);
  const DayResult warmup = simulate_day(state.rng, BidSet{}, decision_day,
                                        config.initial_relative_charge * config.battery_capacity, dataset, config);
  state.day_trace = warmup.battery_trace;
  return state;
}

double estimate_midnight_level(const EnvState& state, const Dataset& dataset, const EnvConfig& config) {
  if (!dataset.has_forecasts()) {
    throw ValidationError("midnight level estimation needs weather forecasts; generate them first");
  }
  double level = state.battery_charge(config);
  for (int h = config.action_hour; h < kHoursPerDay; ++h) {
    const auto& forecast = dataset.forecast(state.day, h);
    const double price = dataset.price(state.day, h);
    HourInputs in;
    in.price = price;
    in.production = hourly_solar(config, forecast.cloudiness) + hourly_wind(config, forecast.wind_speed);
    in.consumption = hourly_consumption(config, dataset.profile.avg_per_household[h], 0.0);
    in.buy_volume = accepted_volume(state.today_bids.buy[h], BidType::kBuy, h, price);
    in.sell_volume = accepted_volume(state.today_bids.sell[h], BidType::kSell, h, price);
    level = settle_hour(config, level, in).battery_level;
  }
  return level / config.battery_capacity;
}

ObservationScales observation_scales(const Dataset& dataset, const EnvConfig& config) {
  ObservationScales scales;
  if (config.price_scale > 0.0) {
    scales.price = config.price_scale;
  } else {
    const DayRange range = dataset.splits ? dataset.splits->train : DayRange{0, dataset.num_days()};
    scales.price = dataset.mean_price(range);
  }
  if (!(scales.price > 0.0)) scales.price = 1.0;
  const double peak = dataset.profile.peak();
  scales.consumption = peak > 0.0 ? peak : 1.0;
  return scales;
}

Observation build_observation(const EnvState& state, const Dataset& dataset, const EnvConfig& config,
                              bool include_weather) {
  return build_observation(state, dataset, config, include_weather, observation_scales(dataset, config));
}

Observation build_observation(const EnvState& state, const Dataset& dataset, const EnvConfig& config,
                              bool include_weather, const ObservationScales& scales) {
  const int day = state.day;
  const int next = day + 1;
  if (include_weather && (!dataset.has_forecasts() || next >= dataset.num_days())) {
    throw ValidationError("no next-day forecast block for day " + std::to_string(day));
  }
  Observation obs;
  obs.reserve(static_cast<std::size_t>(observation_size(include_weather)));
  for (int h = 0; h < kHoursPerDay; ++h) obs.push_back(dataset.price(day, h) / scales.price);
  for (int h = 0; h < kHoursPerDay; ++h) {
    // n * E_avg / (n * peak); zero households give zeros.
    obs.push_back(config.households > 0 ? dataset.profile.avg_per_household[h] / scales.consumption : 0.0);
  }
  obs.push_back(state.battery_charge(config) / config.battery_capacity);
  obs.push_back(estimate_midnight_level(state, dataset, config));
  const Date date = dataset.date(day);
  for (int m = 0; m < 12; ++m) obs.push_back(m == month_index(date) ? 1.0 : 0.0);
  for (int w = 0; w < 7; ++w) obs.push_back(w == weekday_index(date) ? 1.0 : 0.0);
  if (include_weather) {
    const double t_span = config.temperature_max - config.temperature_min;
    for (int h = 0; h < kHoursPerDay; ++h) obs.push_back(dataset.forecast(next, h).cloudiness / 8.0);
    for (int h = 0; h < kHoursPerDay; ++h) obs.push_back(dataset.forecast(next, h).wind_speed / config.max_wind_speed);
    for (int h = 0; h < kHoursPerDay; ++h) {
      obs.push_back((dataset.forecast(next, h).temperature - config.temperature_min) / t_span);
    }
  }
  return obs;
}

DayResult advance_day(EnvState& state, const BidSet& bids, const Dataset& dataset, const EnvConfig& config) {
  const int delivery = state.day + 1;
  if (delivery >= dataset.num_days()) {
    throw ValidationError("delivery day " + std::to_string(delivery) + " is past the end of the dataset");
  }
  DayResult result = simulate_day(state.rng, bids, delivery, state.day_trace[kHoursPerDay], dataset, config);
  state.cash += result.reward;
  state.day = delivery;
  state.day_trace = result.battery_trace;
  state.today_bids = bids;
  return result;
}

namespace {

StepOutcome advance(EnvState& state, const BidSet& bids, const Dataset& dataset, const EnvConfig& config,
                    bool include_weather, const ObservationScales& scales) {
  StepOutcome out;
  const int delivery = state.day + 1;
  if (delivery >= dataset.num_days()) {
    out.terminal = true;
    return out;
  }
  out.result = advance_day(state, bids, dataset, config);
  out.reward = out.result.reward;
  if (delivery + 1 >= dataset.num_days()) {
    out.terminal = true;
    return out;
  }
  out.observation = build_observation(state, dataset, config, include_weather, scales);
  return out;
}

}  // namespace

StepOutcome step_day(EnvState& state, const BidSet& bids, const Dataset& dataset, const EnvConfig& config,
                     bool include_weather) {
  return advance(state, bids, dataset, config, include_weather, observation_scales(dataset, config));
}

double reference_balance(const Dataset& dataset, const EnvConfig& config, DayRange days) {
  if (days.begin < 0 || days.end > dataset.num_days()) {
    throw ValidationError("reference balance range outside dataset");
  }
  double total = 0.0;
  for (int d = days.begin; d < days.end; ++d) {
    double produced = 0.0;
    double consumed = 0.0;
    double price_sum = 0.0;
    for (int h = 0; h < kHoursPerDay; ++h) {
      const auto& r = dataset.at(d, h);
      produced += hourly_solar(config, r.cloudiness) + hourly_wind(config, r.wind_speed);
      consumed += hourly_consumption(config, dataset.profile.avg_per_household[h], 0.0);
      price_sum += r.price;
    }
    total += (produced - consumed) * (price_sum / kHoursPerDay);
  }
  return total;
}

MarketEnv::MarketEnv(std::shared_ptr<const Dataset> dataset, EnvConfig config, bool include_weather)
    : dataset_(std::move(dataset)),
      config_(config),
      include_weather_(include_weather),
      scales_(observation_scales(*dataset_, config_)),
      anchors_(std::make_shared<PriceAnchors>(*dataset_, config_.price_stat_window)) {
  validate(config_);
}

Observation MarketEnv::reset(int decision_day, std::uint64_t seed) {
  state_ = reset_state(decision_day, *dataset_, config_, seed);
  return build_observation(state_, *dataset_, config_, include_weather_, scales_);
}

StepOutcome MarketEnv::step(const BidSet& bids) {
  return advance(state_, bids, *dataset_, config_, include_weather_, scales_);
}

double MarketEnv::estimated_midnight_level() const { return estimate_midnight_level(state_, *dataset_, config_); }

std::span<const double, kHoursPerDay> MarketEnv::next_price_anchors() const {
  return anchors_->for_day(state_.day + 1);
}

void write_day_results(const std::filesystem::path& path, std::span<const DayResult> days) {
  auto out = csv::open_output(path);
  out << "day,hour,price,buy_exec,sell_exec,uns_buy,uns_sell,battery_level,cash_delta\n";
  for (const auto& d : days) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      const auto& o = d.hours[h];
      out << d.day << ',' << h << ',' << csv::format(o.price) << ',' << csv::format(o.buy_executed) << ','
          << csv::format(o.sell_executed) << ',' << csv::format(o.unscheduled_buy) << ','
          << csv::format(o.unscheduled_sell) << ',' << csv::format(o.battery_level) << ','
          << csv::format(o.cash_delta) << '\n';
    }
  }
}

void write_bid_log(const std::filesystem::path& path, std::span<const DayResult> days) {
  auto out = csv::open_output(path);
  out << "day,hour,price,buy_volume,buy_price,sell_volume,sell_price\n";
  for (const auto& d : days) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      out << d.day << ',' << h << ',' << csv::format(d.hours[h].price) << ',' << csv::format(d.bids.buy[h].volume)
          << ',' << csv::format(d.bids.buy[h].price) << ',' << csv::format(d.bids.sell[h].volume) << ','
          << csv::format(d.bids.sell[h].price) << '\n';
    }
  }
}

}  // namespace dabid
