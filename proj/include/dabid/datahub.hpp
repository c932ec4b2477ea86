#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dabid/common.hpp"

namespace dabid {

inline constexpr int kHoursPerDay = 24;
inline constexpr int kMaxOktas = 8;

struct HourlyRecord {
  Date date;
  int hour = 0;
  double price = 0.0;        // currency / MWh
  int cloudiness = 0;        // Oktas
  double wind_speed = 0.0;   // m/s
  double temperature = 0.0;  // deg C
};

struct ForecastRecord {
  Date issue_date;  // forecasts are issued at 10 am of this day
  Date target_date;
  int target_hour = 0;
  int cloudiness = 0;
  double wind_speed = 0.0;
  double temperature = 0.0;
};

struct ConsumptionProfile {
  std::array<double, kHoursPerDay> avg_per_household{};  // MWh per household per hour

  double peak() const;
  double daily_total() const;

  // Evening-peaked household curve, about 7.5 kWh per day.
  static ConsumptionProfile default_profile();
};

// Half-open range of day indices [begin, end).
struct DayRange {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool contains(int day) const { return day >= begin && day < end; }
  bool operator==(const DayRange&) const = default;
};

struct SplitBoundaries {
  DayRange train;
  DayRange validation;
  DayRange test;
};

// The replayed uncontrollable trajectory. Records are day-major with exactly
// 24 per day; forecasts are either empty or aligned with records, indexed by
// target day and hour (issued at 10 am of the previous day).
struct Dataset {
  std::vector<HourlyRecord> records;
  std::vector<ForecastRecord> forecasts;
  ConsumptionProfile profile;
  std::optional<SplitBoundaries> splits;

  int num_days() const { return static_cast<int>(records.size()) / kHoursPerDay; }
  Date start_date() const { return records.front().date; }
  Date date(int day) const { return records[static_cast<std::size_t>(day) * kHoursPerDay].date; }
  const HourlyRecord& at(int day, int hour) const {
    return records[static_cast<std::size_t>(day) * kHoursPerDay + static_cast<std::size_t>(hour)];
  }
  double price(int day, int hour) const { return at(day, hour).price; }
  bool has_forecasts() const { return !forecasts.empty(); }
  const ForecastRecord& forecast(int target_day, int hour) const {
    return forecasts[static_cast<std::size_t>(target_day) * kHoursPerDay + static_cast<std::size_t>(hour)];
  }
  const SplitBoundaries& split() const;

  double mean_price(DayRange range) const;

  // FNV-1a over the bit patterns of every stored value.
  std::uint64_t content_hash() const;
};

// Throws SchemaError / ValidationError on any invariant violation.
void validate(const Dataset& dataset);

Dataset load_dataset(const std::filesystem::path& price_path, const std::filesystem::path& weather_path,
                     const std::filesystem::path& profile_path);

// Reads forecasts.csv into an already loaded dataset.
void load_forecasts(Dataset& dataset, const std::filesystem::path& forecast_path);

// Writes prices.csv, weather.csv, profile.csv and (when present) forecasts.csv.
void write_dataset(const Dataset& dataset, const std::filesystem::path& directory);

struct GeneratorConfig {
  Date start_date{std::chrono::year{2016}, std::chrono::January, std::chrono::day{1}};
  double base_price = 250.0;
  double seasonal_price_amplitude = 0.10;
  double weekend_factor = 0.85;
  double daily_level_persistence = 0.75;
  double daily_level_sigma = 0.07;
  double hourly_price_sigma = 0.06;
  // Log-price sensitivities to the actual weather (merit-order effect).
  double wind_price_coupling = 0.08;
  double solar_price_coupling = 0.06;
  double cold_price_coupling = 0.05;
  double mean_cloudiness = 5.2;
  double mean_wind_speed = 3.6;
  double mean_temperature = 8.0;
  ConsumptionProfile profile = ConsumptionProfile::default_profile();
};

inline constexpr int kMinSyntheticDays = 56;

Dataset generate_synthetic_dataset(std::uint64_t seed, int num_days, const GeneratorConfig& config = {});

struct ForecastSigmas {
  double cloudiness = 2.0;   // Oktas
  double wind_speed = 1.0;   // m/s
  double temperature = 2.0;  // deg C
};

// Steps after the 10 am issuance covered by one forecast run and the window
// kept (next-day hours 0..23).
inline constexpr int kForecastSteps = 37;
inline constexpr int kFirstKeptStep = 14;

// Raw accumulated deviations d_t, before clipping, for every kept step:
// index [(target_day * 24 + hour) * 3 + variable], variables ordered
// cloudiness, wind speed, temperature.
struct ForecastDeviations {
  std::vector<double> values;
  double at(int target_day, int hour, int variable) const {
    return values[(static_cast<std::size_t>(target_day) * kHoursPerDay + static_cast<std::size_t>(hour)) * 3 +
                  static_cast<std::size_t>(variable)];
  }
};

struct ForecastOptions {
  bool clip = true;
  ForecastDeviations* deviations = nullptr;
};

// Random-walk forecast noising: eps_t ~ N(0, sigma^2/24), d_t = sum eps_i,
// forecast = actual + d_t at steps 14..37.
Dataset make_forecasts(const Dataset& dataset, const ForecastSigmas& sigmas, std::uint64_t seed,
                       const ForecastOptions& options = {});

Dataset split_dataset(Dataset dataset, const SplitBoundaries& boundaries);

// Calendar-quarter split in the 11:1:4 train:validation:test proportion.
Dataset split_dataset(Dataset dataset);

}  // namespace dabid
