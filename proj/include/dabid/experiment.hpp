#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dabid/datahub.hpp"
#include "dabid/kvconfig.hpp"
#include "dabid/market_env.hpp"
#include "dabid/optimizers.hpp"
#include "dabid/strategies.hpp"

namespace dabid {

// Everything needed to rerun an experiment. Stored as a flat key-value file
// whose keys follow the parameter names of the environment, CMA-ES and A2C
// tables (learning_rate, n_steps, gae_lambda, ...).
struct ExperimentConfig {
  std::string data_dir;  // empty: synthetic data from `seed`
  std::uint64_t seed = 7;
  int days = 1461;
  Date start_date{std::chrono::year{2016}, std::chrono::January, std::chrono::day{1}};
  ForecastSigmas forecast_sigmas;
  EnvConfig env;

  int generations = 100;
  int population = 0;  // <= 0: 4 + floor(3 ln n)
  double initial_sigma = 1.0;

  A2cConfig a2c;  // a2c.seed is replaced per run

  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<double> battery_capacities{1.0, 1.5, 2.0};
  long sweep_total_timesteps = 0;  // <= 0: same budget as total_timesteps

  int report_window_days = 5;
  int report_window_start = -1;  // day index; < 0 centers the window in the test range
};

void validate(const ExperimentConfig& config);
ExperimentConfig experiment_config_from(const KeyValues& values);
KeyValues to_key_values(const ExperimentConfig& config);
// Accepts a flat key-value file or a run manifest (.json) holding one.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Seed of one evaluation run, derived from the master seed.
std::uint64_t run_seed(const ExperimentConfig& config, std::uint64_t seed);

// Loads data_dir (generating forecasts when the directory has none) or
// generates the synthetic dataset, then applies the default split.
Dataset prepare_dataset(const ExperimentConfig& config);

// Delivery days used by CMA-ES: training plus validation split after the
// price-statistics warm-up.
DayRange optimization_range(const Dataset& dataset, const EnvConfig& config);

double mean_of(std::span<const double> values);
// Population standard deviation (divides by the count).
double std_of(std::span<const double> values);

// One strategy's test incomes over the seed list. Artifact paths are relative
// to the output directory.
struct StrategyRow {
  std::string name;
  std::string label;
  std::optional<double> battery_capacity;
  std::vector<std::uint64_t> seeds;
  std::vector<double> incomes;
  std::vector<std::string> artifacts;  // one run directory per seed
  DayRange test_range;

  double mean() const { return mean_of(incomes); }
  double std() const { return std_of(incomes); }
};

void save_row(const StrategyRow& row, const std::filesystem::path& out_dir);
std::vector<StrategyRow> load_rows(const std::filesystem::path& out_dir);

struct DatasetSummary {
  int days = 0;
  std::string first_date;
  std::string last_date;
  double mean_price = 0.0;
  double min_price = 0.0;
  double max_price = 0.0;
  double mean_wind_speed = 0.0;
  double mean_cloudiness = 0.0;
  double mean_temperature = 0.0;
  std::uint64_t content_hash = 0;
};

DatasetSummary summarize(const Dataset& dataset);
std::string to_string(const DatasetSummary& summary);

// Writes the four CSVs into `directory` and returns the summary.
DatasetSummary generate_data(const ExperimentConfig& config, const std::filesystem::path& directory);

struct OptimizeOutcome {
  StrategyRow optimized;
  StrategyRow initial;  // the CMA-ES starting means, unoptimized
};

OptimizeOutcome run_optimize(const Dataset& dataset, const ExperimentConfig& config, StrategyKind kind,
                             const std::filesystem::path& out_dir);

StrategyRow run_train_rl(const Dataset& dataset, const ExperimentConfig& config, bool include_weather,
                         const std::filesystem::path& out_dir, const std::string& name = {});

// Evaluates a fixed strategy document on the test window for every seed.
StrategyRow run_evaluate(const Dataset& dataset, const ExperimentConfig& config, const StrategyDocument& document,
                         const std::filesystem::path& base_dir, const std::string& name,
                         const std::filesystem::path& out_dir);

std::vector<StrategyRow> run_battery_sweep(const Dataset& dataset, const ExperimentConfig& config,
                                           const std::filesystem::path& out_dir);

struct BalanceReport {
  double reference = 0.0;
  DayRange test_range;
  std::vector<StrategyRow> rows;  // strategies
  std::vector<StrategyRow> sweep;  // battery sweep, capacity ascending
};

// Reads the stored rows, checks every artifact exists, and writes the
// balance tables and the figure traces under out_dir/report.
BalanceReport assemble_report(const Dataset& dataset, const ExperimentConfig& config,
                              const std::filesystem::path& out_dir);

// Run manifest: configuration, data hash and the rows produced so far.
void write_manifest(const ExperimentConfig& config, const Dataset& dataset, const std::filesystem::path& out_dir);

}  // namespace dabid
