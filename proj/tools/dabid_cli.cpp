// Command-line front end: dataset generation, strategy optimization, RL
// training, evaluation, the battery sweep and report assembly.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "dabid/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitMissingArtifact = 3;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string data_dir;
};

dabid::ExperimentConfig load_config(const GlobalOptions& g) {
  dabid::ExperimentConfig config;
  if (!g.config_path.empty()) {
    if (!fs::exists(g.config_path)) throw dabid::MissingArtifactError("config file not found: " + g.config_path);
    config = dabid::load_experiment_config(g.config_path);
  }
  if (g.seed) config.seed = *g.seed;
  if (!g.data_dir.empty()) config.data_dir = g.data_dir;
  dabid::validate(config);
  return config;
}

void print_row(const dabid::StrategyRow& row) {
  std::printf("%-28s mean %12.2f  std %10.2f  (n=%zu)\n", row.name.c_str(), row.mean(), row.std(),
              row.incomes.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Day-ahead electricity market bidding lab"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Flat key-value config file or run manifest (.json)");
  app.add_option("--seed", g.seed, "Master seed (data generation and all run seeds derive from it)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--data", g.data_dir, "Directory with prices.csv, weather.csv, profile.csv");

  auto* generate = app.add_subcommand("generate-data", "Write a synthetic dataset");
  std::optional<int> days;
  generate->add_option("--days", days, "Number of days");

  auto* optimize = app.add_subcommand("optimize", "Optimize a parametric strategy with CMA-ES");
  std::string strategy_kind = "timing";
  optimize->add_option("--strategy", strategy_kind, "timing or opportunistic")
      ->check(CLI::IsMember({"timing", "opportunistic"}));

  auto* train = app.add_subcommand("train-rl", "Train the black-box strategy with A2C");
  bool no_weather = false;
  std::string train_name;
  train->add_flag("--no-weather", no_weather, "Leave weather forecasts out of the observation");
  train->add_option("--name", train_name, "Row name in the report");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a fixed strategy on the test window");
  std::string eval_strategy;
  std::string eval_file;
  std::string eval_name;
  evaluate->add_option("--strategy", eval_strategy, "zero_action (the untrained black-box baseline)");
  evaluate->add_option("--strategy-file", eval_file, "Strategy JSON document");
  evaluate->add_option("--name", eval_name, "Row name in the report");

  auto* sweep = app.add_subcommand("sweep-battery", "Train and test A2C for each battery capacity");
  auto* report = app.add_subcommand("report", "Assemble balance tables and figure traces");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    dabid::ExperimentConfig config = load_config(g);
    const fs::path out = g.out;

    if (generate->parsed()) {
      if (days) config.days = *days;
      const auto summary = dabid::generate_data(config, out);
      std::cout << dabid::to_string(summary);
      return kExitOk;
    }

    const dabid::Dataset dataset = dabid::prepare_dataset(config);

    if (optimize->parsed()) {
      const auto outcome = dabid::run_optimize(dataset, config, dabid::parse_strategy_kind(strategy_kind), out);
      print_row(outcome.initial);
      print_row(outcome.optimized);
    } else if (train->parsed()) {
      print_row(dabid::run_train_rl(dataset, config, !no_weather, out, train_name));
    } else if (evaluate->parsed()) {
      dabid::StrategyDocument doc;
      fs::path base;
      std::string name = eval_name;
      if (!eval_file.empty()) {
        doc = dabid::load_strategy(eval_file);
        base = fs::path(eval_file).parent_path();
        if (name.empty()) name = fs::path(eval_file).stem().string();
      } else if (!eval_strategy.empty()) {
        doc.kind = dabid::parse_strategy_kind(eval_strategy);
        if (doc.kind != dabid::StrategyKind::kZeroAction) {
          throw dabid::ValidationError("--strategy only names parameter-free strategies; use --strategy-file");
        }
        if (name.empty()) name = eval_strategy;
      } else {
        throw dabid::ValidationError("evaluate needs --strategy or --strategy-file");
      }
      print_row(dabid::run_evaluate(dataset, config, doc, base, name, out));
    } else if (sweep->parsed()) {
      for (const auto& row : dabid::run_battery_sweep(dataset, config, out)) print_row(row);
    } else if (report->parsed()) {
      const auto r = dabid::assemble_report(dataset, config, out);
      std::printf("%-28s %12.2f\n", "reference", r.reference);
      for (const auto& row : r.rows) print_row(row);
      for (const auto& row : r.sweep) print_row(row);
    }
    dabid::write_manifest(config, dataset, out);
    return kExitOk;
  } catch (const dabid::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingArtifact;
  } catch (const dabid::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
