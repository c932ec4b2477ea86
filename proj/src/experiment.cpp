#include "dabid/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "csv.hpp"
#include "json.hpp"
#include "kv.hpp"

namespace dabid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string format_list(std::span<const double> values) {
  std::vector<std::string> items;
  for (double v : values) items.push_back(csv::format(v));
  return join(items, ',');
}

std::string format_seeds(std::span<const std::uint64_t> values) {
  std::vector<std::string> items;
  for (auto v : values) items.push_back(std::to_string(v));
  return join(items, ',');
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ValidationError(key + ": " + what);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = csv::open_output(path);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string seed_dir(const std::string& name, std::uint64_t seed) {
  return "runs/" + name + "/seed_" + std::to_string(seed);
}

std::string capacity_name(double capacity) {
  std::string text = csv::format(capacity);
  if (text.find('.') == std::string::npos) text += ".0";
  return "sweep_capacity_" + text;
}

void write_test_artifacts(const fs::path& dir, std::span<const DayResult> days) {
  write_day_results(dir / "test_days.csv", days);
  write_bid_log(dir / "bids.csv", days);
}

void write_cmaes_history(const fs::path& path, const CmaesResult& result) {
  auto out = csv::open_output(path);
  out << "generation,best_value,mean_value,sigma\n";
  for (const auto& g : result.history) {
    out << g.generation << ',' << csv::format(g.best_value) << ',' << csv::format(g.mean_value) << ','
        << csv::format(g.sigma) << '\n';
  }
}

std::unique_ptr<Strategy> strategy_for(StrategyKind kind, const Eigen::VectorXd& x) {
  const std::span<const double> values(x.data(), static_cast<std::size_t>(x.size()));
  if (kind == StrategyKind::kTiming) return std::make_unique<TimingStrategy>(timing_params_from(values));
  return std::make_unique<OpportunisticStrategy>(opportunistic_params_from(values));
}

// Fixed display order of the balance table; unknown names follow alphabetically.
int row_rank(const std::string& name) {
  static const std::vector<std::string> order = {"a2c", "a2c_no_weather", "a2c_gae0", "timing", "opportunistic",
                                                 "timing_initial", "opportunistic_initial", "zero_action"};
  const auto it = std::find(order.begin(), order.end(), name);
  return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

std::string default_label(const std::string& name) {
  static const std::map<std::string, std::string> labels = {
      {"a2c", "Proposed (A2C)"},
      {"a2c_no_weather", "Proposed (A2C, no weather forecasts)"},
      {"timing", "Timing (CMA-ES)"},
      {"opportunistic", "Opportunistic (CMA-ES)"},
      {"timing_initial", "Timing (initial parameters)"},
      {"opportunistic_initial", "Opportunistic (initial parameters)"},
      {"zero_action", "Black-box (zero action)"},
  };
  const auto it = labels.find(name);
  return it == labels.end() ? name : it->second;
}

}  // namespace

// ---------------------------------------------------------------- config

void validate(const ExperimentConfig& c) {
  require(!c.seeds.empty(), "seeds", "at least one seed is required");
  require(c.days >= kMinSyntheticDays || !c.data_dir.empty(), "days",
          "at least " + std::to_string(kMinSyntheticDays) + " days are required");
  require(c.generations >= 0, "generations", "must be non-negative");
  require(c.population <= 0 || c.population >= 4, "population", "must be at least 4");
  require(c.initial_sigma > 0.0, "initial_sigma", "must be positive");
  require(c.forecast_sigmas.cloudiness >= 0.0 && c.forecast_sigmas.wind_speed >= 0.0 &&
              c.forecast_sigmas.temperature >= 0.0,
          "forecast_sigma", "must be non-negative");
  for (double cap : c.battery_capacities) require(cap > 0.0, "battery_capacities", "must be positive");
  require(c.report_window_days >= 1, "report_window_days", "must be positive");
  validate(c.env);
  validate(c.a2c);
}

ExperimentConfig experiment_config_from(const KeyValues& values) {
  ExperimentConfig c;
  kv::read(values, "data_dir", c.data_dir);
  kv::read(values, "seed", c.seed);
  kv::read(values, "days", c.days);
  if (auto it = values.find("start_date"); it != values.end()) c.start_date = parse_date(it->second);
  kv::read(values, "forecast_sigma_cloudiness", c.forecast_sigmas.cloudiness);
  kv::read(values, "forecast_sigma_wind_speed", c.forecast_sigmas.wind_speed);
  kv::read(values, "forecast_sigma_temperature", c.forecast_sigmas.temperature);
  apply_overrides(c.env, values);

  kv::read(values, "generations", c.generations);
  kv::read(values, "population", c.population);
  kv::read(values, "initial_sigma", c.initial_sigma);

  A2cConfig& a = c.a2c;
  kv::read(values, "total_timesteps", a.total_timesteps);
  kv::read(values, "eval_frequency", a.eval_frequency);
  kv::read(values, "episode_length", a.episode_length);
  kv::read(values, "learning_rate", a.learning_rate);
  kv::read(values, "n_steps", a.n_steps);
  kv::read(values, "gamma", a.gamma);
  kv::read(values, "gae_lambda", a.gae_lambda);
  kv::read(values, "ent_coef", a.ent_coef);
  kv::read(values, "vf_coef", a.vf_coef);
  kv::read(values, "rms_prop_eps", a.rms_prop_eps);
  kv::read(values, "rms_prop_decay", a.rms_prop_decay);
  kv::read(values, "max_grad_norm", a.max_grad_norm);
  kv::read(values, "net_arch", a.net_arch);
  kv::read(values, "log_std_init", a.log_std_init);
  kv::read(values, "reward_scale", a.reward_scale);
  kv::read(values, "validation_days", a.validation_days);
  kv::read(values, "test_days", a.test_days);

  // Fixed choices of the trainer; accepted for completeness of the file.
  bool flag = true;
  kv::read(values, "use_rms_prop", flag);
  require(flag, "use_rms_prop", "only the RMSprop optimizer is implemented");
  flag = false;
  kv::read(values, "use_sde", flag);
  require(!flag, "use_sde", "state-dependent exploration is not implemented");
  flag = false;
  kv::read(values, "normalize_images", flag);
  require(!flag, "normalize_images", "observations are normalized by the environment");
  flag = true;
  kv::read(values, "ortho_init", flag);
  require(flag, "ortho_init", "only orthogonal initialization is implemented");
  std::string activation = "tanh";
  kv::read(values, "activation_fn", activation);
  require(activation == "tanh", "activation_fn", "only tanh is implemented");

  kv::read(values, "seeds", c.seeds);
  kv::read(values, "battery_capacities", c.battery_capacities);
  kv::read(values, "sweep_total_timesteps", c.sweep_total_timesteps);
  kv::read(values, "report_window_days", c.report_window_days);
  kv::read(values, "report_window_start", c.report_window_start);
  validate(c);
  return c;
}

KeyValues to_key_values(const ExperimentConfig& c) {
  KeyValues v = to_key_values(c.env);
  v["data_dir"] = c.data_dir;
  v["seed"] = std::to_string(c.seed);
  v["days"] = std::to_string(c.days);
  v["start_date"] = format_date(c.start_date);
  v["forecast_sigma_cloudiness"] = csv::format(c.forecast_sigmas.cloudiness);
  v["forecast_sigma_wind_speed"] = csv::format(c.forecast_sigmas.wind_speed);
  v["forecast_sigma_temperature"] = csv::format(c.forecast_sigmas.temperature);
  v["generations"] = std::to_string(c.generations);
  v["population"] = std::to_string(c.population);
  v["initial_sigma"] = csv::format(c.initial_sigma);
  const A2cConfig& a = c.a2c;
  v["total_timesteps"] = std::to_string(a.total_timesteps);
  v["eval_frequency"] = std::to_string(a.eval_frequency);
  v["episode_length"] = std::to_string(a.episode_length);
  v["learning_rate"] = csv::format(a.learning_rate);
  v["n_steps"] = std::to_string(a.n_steps);
  v["gamma"] = csv::format(a.gamma);
  v["gae_lambda"] = csv::format(a.gae_lambda);
  v["ent_coef"] = csv::format(a.ent_coef);
  v["vf_coef"] = csv::format(a.vf_coef);
  v["use_rms_prop"] = "true";
  v["rms_prop_eps"] = csv::format(a.rms_prop_eps);
  v["rms_prop_decay"] = csv::format(a.rms_prop_decay);
  v["use_sde"] = "false";
  v["max_grad_norm"] = csv::format(a.max_grad_norm);
  v["net_arch"] = std::to_string(a.net_arch);
  v["log_std_init"] = csv::format(a.log_std_init);
  v["normalize_images"] = "false";
  v["activation_fn"] = "tanh";
  v["ortho_init"] = "true";
  v["reward_scale"] = csv::format(a.reward_scale);
  v["validation_days"] = std::to_string(a.validation_days);
  v["test_days"] = std::to_string(a.test_days);
  v["seeds"] = format_seeds(c.seeds);
  v["battery_capacities"] = format_list(c.battery_capacities);
  v["sweep_total_timesteps"] = std::to_string(c.sweep_total_timesteps);
  v["report_window_days"] = std::to_string(c.report_window_days);
  v["report_window_start"] = std::to_string(c.report_window_start);
  return v;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  if (path.extension() == ".json") {
    try {
      const json j = json::parse(read_text(path));
      return experiment_config_from(j.at("config").get<KeyValues>());
    } catch (const json::exception& e) {
      throw ParseError(path.filename().string() + ": " + e.what());
    }
  }
  return experiment_config_from(read_key_values(path));
}

std::uint64_t run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  return derive_seed(config.seed, 0x100 + seed);
}

// ---------------------------------------------------------------- data

Dataset prepare_dataset(const ExperimentConfig& config) {
  Dataset dataset;
  if (config.data_dir.empty()) {
    GeneratorConfig gen;
    gen.start_date = config.start_date;
    dataset = generate_synthetic_dataset(config.seed, config.days, gen);
    dataset = make_forecasts(dataset, config.forecast_sigmas, derive_seed(config.seed, Stream::kForecast));
  } else {
    const fs::path dir = config.data_dir;
    dataset = load_dataset(dir / "prices.csv", dir / "weather.csv", dir / "profile.csv");
    if (fs::exists(dir / "forecasts.csv")) {
      load_forecasts(dataset, dir / "forecasts.csv");
    } else {
      dataset = make_forecasts(dataset, config.forecast_sigmas, derive_seed(config.seed, Stream::kForecast));
    }
  }
  return split_dataset(std::move(dataset));
}

DayRange optimization_range(const Dataset& dataset, const EnvConfig& config) {
  const auto& s = dataset.split();
  const DayRange range{std::max({s.train.begin, config.price_stat_window, 1}), s.validation.end};
  if (range.empty()) throw ValidationError("no training days left after the price-statistics warm-up");
  return range;
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double std_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean_of(values);
  double sum = 0.0;
  for (double v : values) sum += (v - m) * (v - m);
  return std::sqrt(sum / static_cast<double>(values.size()));
}

DatasetSummary summarize(const Dataset& dataset) {
  DatasetSummary s;
  s.days = dataset.num_days();
  s.first_date = format_date(dataset.date(0));
  s.last_date = format_date(dataset.date(dataset.num_days() - 1));
  s.min_price = dataset.records.front().price;
  s.max_price = s.min_price;
  for (const auto& r : dataset.records) {
    s.mean_price += r.price;
    s.min_price = std::min(s.min_price, r.price);
    s.max_price = std::max(s.max_price, r.price);
    s.mean_wind_speed += r.wind_speed;
    s.mean_cloudiness += r.cloudiness;
    s.mean_temperature += r.temperature;
  }
  const double n = static_cast<double>(dataset.records.size());
  s.mean_price /= n;
  s.mean_wind_speed /= n;
  s.mean_cloudiness /= n;
  s.mean_temperature /= n;
  s.content_hash = dataset.content_hash();
  return s;
}

std::string to_string(const DatasetSummary& s) {
  std::ostringstream out;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(s.content_hash));
  out << "days: " << s.days << " (" << s.first_date << " .. " << s.last_date << ")\n"
      << "price: mean " << s.mean_price << ", min " << s.min_price << ", max " << s.max_price << '\n'
      << "weather means: cloudiness " << s.mean_cloudiness << " okta, wind " << s.mean_wind_speed
      << " m/s, temperature " << s.mean_temperature << " C\n"
      << "content hash: " << hash << '\n';
  return out.str();
}

DatasetSummary generate_data(const ExperimentConfig& config, const fs::path& directory) {
  validate(config);
  GeneratorConfig gen;
  gen.start_date = config.start_date;
  Dataset dataset = generate_synthetic_dataset(config.seed, config.days, gen);
  dataset = make_forecasts(dataset, config.forecast_sigmas, derive_seed(config.seed, Stream::kForecast));
  write_dataset(dataset, directory);
  return summarize(dataset);
}

// ---------------------------------------------------------------- rows

void save_row(const StrategyRow& row, const fs::path& out_dir) {
  json j = {{"name", row.name},
            {"label", row.label},
            {"seeds", row.seeds},
            {"incomes", row.incomes},
            {"artifacts", row.artifacts},
            {"test_range", {row.test_range.begin, row.test_range.end}}};
  if (row.battery_capacity) j["battery_capacity"] = *row.battery_capacity;
  write_text(out_dir / "rows" / (row.name + ".json"), j.dump(2) + "\n");
}

std::vector<StrategyRow> load_rows(const fs::path& out_dir) {
  std::vector<StrategyRow> rows;
  const fs::path dir = out_dir / "rows";
  if (!fs::is_directory(dir)) return rows;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    try {
      const json j = json::parse(read_text(file));
      StrategyRow row;
      row.name = j.at("name").get<std::string>();
      row.label = j.at("label").get<std::string>();
      row.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
      row.incomes = j.at("incomes").get<std::vector<double>>();
      row.artifacts = j.at("artifacts").get<std::vector<std::string>>();
      const auto range = j.at("test_range").get<std::vector<int>>();
      if (range.size() != 2) throw ParseError("test_range needs two entries");
      row.test_range = {range[0], range[1]};
      if (j.contains("battery_capacity")) row.battery_capacity = j.at("battery_capacity").get<double>();
      if (row.incomes.size() != row.seeds.size() || row.artifacts.size() != row.seeds.size()) {
        throw SchemaError(file.filename().string() + ": seeds, incomes and artifacts differ in length");
      }
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw ParseError(file.filename().string() + ": " + e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------- runs

OptimizeOutcome run_optimize(const Dataset& dataset, const ExperimentConfig& config, StrategyKind kind,
                             const fs::path& out_dir) {
  validate(config);
  if (kind != StrategyKind::kTiming && kind != StrategyKind::kOpportunistic) {
    throw ValidationError("optimize supports the timing and opportunistic strategies");
  }
  const std::string name = to_string(kind);
  const int dim = kind == StrategyKind::kTiming ? 2 : kOpportunisticParamCount;
  const DayRange train = optimization_range(dataset, config.env);
  const DayRange test = test_window(dataset, config.a2c.test_days);
  const PriceAnchors anchors(dataset, config.env.price_stat_window);

  OptimizeOutcome outcome;
  outcome.optimized = {name, default_label(name), std::nullopt, {}, {}, {}, test};
  outcome.initial = {name + "_initial", default_label(name + "_initial"), std::nullopt, {}, {}, {}, test};

  for (std::uint64_t s : config.seeds) {
    const std::uint64_t rs = run_seed(config, s);
    const std::uint64_t init_seed = derive_seed(rs, Stream::kInit);
    const std::uint64_t objective_seed = derive_seed(rs, Stream::kOptimizer);

    CmaesConfig cma;
    cma.initial_mean = kind == StrategyKind::kTiming ? standard_initial_mean(dim, init_seed)
                                                      : opportunistic_initial_mean(init_seed);
    cma.initial_sigma = config.initial_sigma;
    cma.population = config.population;
    cma.generations = config.generations;
    cma.seed = objective_seed;

    EvaluationOptions train_options;
    train_options.anchors = &anchors;
    const Objective objective = [&](const Eigen::VectorXd& x) {
      return evaluate_strategy(*strategy_for(kind, x), dataset, train, config.env, objective_seed, train_options)
          .total;
    };
    const CmaesResult result = cmaes_maximize(objective, dim, cma);

    EvaluationOptions test_options;
    test_options.anchors = &anchors;
    test_options.keep_days = true;

    const Eigen::VectorXd initial = Eigen::Map<const Eigen::VectorXd>(cma.initial_mean.data(), dim);
    for (auto* row : {&outcome.optimized, &outcome.initial}) {
      const Eigen::VectorXd& x = row == &outcome.optimized ? result.mean : initial;
      const auto eval = evaluate_strategy(*strategy_for(kind, x), dataset, test, config.env, rs, test_options);
      const std::string rel = seed_dir(row->name, s);
      const fs::path dir = out_dir / rel;
      save_strategy({kind, std::vector<double>(x.data(), x.data() + x.size()), {}}, dir / "strategy.json");
      write_test_artifacts(dir, eval.days);
      if (row == &outcome.optimized) write_cmaes_history(dir / "cmaes_history.csv", result);
      row->seeds.push_back(s);
      row->incomes.push_back(eval.total);
      row->artifacts.push_back(rel);
    }
  }
  save_row(outcome.optimized, out_dir);
  save_row(outcome.initial, out_dir);
  return outcome;
}

StrategyRow run_train_rl(const Dataset& dataset, const ExperimentConfig& config, bool include_weather,
                         const fs::path& out_dir, const std::string& name) {
  validate(config);
  const std::string row_name = !name.empty() ? name : include_weather ? "a2c" : "a2c_no_weather";
  auto shared = std::make_shared<const Dataset>(dataset);
  const DayRange test = test_window(dataset, config.a2c.test_days);
  StrategyRow row{row_name, default_label(row_name), std::nullopt, {}, {}, {}, test};
  for (std::uint64_t s : config.seeds) {
    A2cConfig a = config.a2c;
    a.seed = run_seed(config, s);
    a.include_weather = include_weather;
    PolicyParams policy = make_initial_policy(dataset, config.env, a);
    const TrainingRun run = a2c_train(shared, config.env, std::move(policy), a);
    const std::string rel = seed_dir(row_name, s);
    const fs::path dir = out_dir / rel;
    save_policy(run.best_policy, dir / "policy.json");
    save_strategy({StrategyKind::kBlackBox, {}, "policy.json"}, dir / "strategy.json");
    write_training_log(dir / "training_log.csv", run.log);
    write_test_artifacts(dir, run.test_days);
    row.seeds.push_back(s);
    row.incomes.push_back(run.test_total);
    row.artifacts.push_back(rel);
  }
  save_row(row, out_dir);
  return row;
}

StrategyRow run_evaluate(const Dataset& dataset, const ExperimentConfig& config, const StrategyDocument& document,
                         const fs::path& base_dir, const std::string& name, const fs::path& out_dir) {
  validate(config);
  const auto strategy = make_strategy(document, base_dir);
  const DayRange test = test_window(dataset, config.a2c.test_days);
  const PriceAnchors anchors(dataset, config.env.price_stat_window);
  StrategyRow row{name, default_label(name), std::nullopt, {}, {}, {}, test};
  for (std::uint64_t s : config.seeds) {
    EvaluationOptions options;
    options.anchors = &anchors;
    options.keep_days = true;
    const auto eval = evaluate_strategy(*strategy, dataset, test, config.env, run_seed(config, s), options);
    const std::string rel = seed_dir(name, s);
    const fs::path dir = out_dir / rel;
    StrategyDocument copy = document;
    if (!document.policy_file.empty()) {
      fs::create_directories(dir);
      fs::copy_file(base_dir / document.policy_file, dir / "policy.json", fs::copy_options::overwrite_existing);
      copy.policy_file = "policy.json";
    }
    save_strategy(copy, dir / "strategy.json");
    write_test_artifacts(dir, eval.days);
    row.seeds.push_back(s);
    row.incomes.push_back(eval.total);
    row.artifacts.push_back(rel);
  }
  save_row(row, out_dir);
  return row;
}

std::vector<StrategyRow> run_battery_sweep(const Dataset& dataset, const ExperimentConfig& config,
                                           const fs::path& out_dir) {
  std::vector<double> capacities = config.battery_capacities;
  std::sort(capacities.begin(), capacities.end());
  std::vector<StrategyRow> rows;
  for (double capacity : capacities) {
    ExperimentConfig c = config;
    c.env.battery_capacity = capacity;
    if (config.sweep_total_timesteps > 0) c.a2c.total_timesteps = config.sweep_total_timesteps;
    StrategyRow row = run_train_rl(dataset, c, true, out_dir, capacity_name(capacity));
    row.battery_capacity = capacity;
    row.label = "Battery " + csv::format(capacity) + " MWh (A2C)";
    save_row(row, out_dir);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------- report

namespace {

struct HourValues {
  std::vector<double> battery;
  std::vector<double> uns_buy;
  std::vector<double> uns_sell;
};

void write_traces(const fs::path& out_dir, const StrategyRow& row, DayRange window) {
  const auto slot = [&](int day, int hour) { return static_cast<std::size_t>((day - window.begin) * kHoursPerDay + hour); };
  std::vector<HourValues> hours(static_cast<std::size_t>(window.size() * kHoursPerDay));
  for (const auto& rel : row.artifacts) {
    const auto table = csv::read(out_dir / rel / "test_days.csv",
                                 {"day", "hour", "price", "buy_exec", "sell_exec", "uns_buy", "uns_sell",
                                  "battery_level", "cash_delta"});
    for (const auto& r : table.rows) {
      const int day = csv::to_int(r[0], "day");
      if (!window.contains(day)) continue;
      auto& h = hours[slot(day, csv::to_int(r[1], "hour"))];
      h.uns_buy.push_back(csv::to_double(r[5], "uns_buy"));
      h.uns_sell.push_back(csv::to_double(r[6], "uns_sell"));
      h.battery.push_back(csv::to_double(r[7], "battery_level"));
    }
  }
  const fs::path dir = out_dir / "report" / "traces";
  auto battery = csv::open_output(dir / (row.name + "_battery.csv"));
  auto unscheduled = csv::open_output(dir / (row.name + "_unscheduled.csv"));
  battery << "day,hour,mean,min,max\n";
  unscheduled << "day,hour,uns_buy,uns_sell\n";
  for (int day = window.begin; day < window.end; ++day) {
    for (int hour = 0; hour < kHoursPerDay; ++hour) {
      const auto& h = hours[slot(day, hour)];
      if (h.battery.size() != row.artifacts.size()) {
        throw MissingArtifactError(row.name + ": test results do not cover day " + std::to_string(day));
      }
      const auto [lo, hi] = std::minmax_element(h.battery.begin(), h.battery.end());
      battery << day << ',' << hour << ',' << csv::format(mean_of(h.battery)) << ',' << csv::format(*lo) << ','
              << csv::format(*hi) << '\n';
      unscheduled << day << ',' << hour << ',' << csv::format(mean_of(h.uns_buy)) << ','
                  << csv::format(mean_of(h.uns_sell)) << '\n';
    }
  }

  // Bids of the first seed's run, next to the unscaled market price.
  const auto bids = csv::read(out_dir / row.artifacts.front() / "bids.csv",
                              {"day", "hour", "price", "buy_volume", "buy_price", "sell_volume", "sell_price"});
  auto out = csv::open_output(dir / (row.name + "_bids.csv"));
  out << "day,hour,market_price,buy_volume,buy_price,sell_volume,sell_price\n";
  for (const auto& r : bids.rows) {
    if (!window.contains(csv::to_int(r[0], "day"))) continue;
    out << join(r, ',') << '\n';
  }
}

}  // namespace

BalanceReport assemble_report(const Dataset& dataset, const ExperimentConfig& config, const fs::path& out_dir) {
  validate(config);
  std::vector<StrategyRow> rows = load_rows(out_dir);
  if (rows.empty()) {
    throw MissingArtifactError("no run results under " + (out_dir / "rows").string() +
                               "; run optimize, train-rl, evaluate or sweep-battery first");
  }
  std::vector<std::string> missing;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.artifacts.size(); ++i) {
      for (const char* file : {"test_days.csv", "bids.csv", "strategy.json"}) {
        if (!fs::exists(out_dir / row.artifacts[i] / file)) {
          missing.push_back(row.name + " seed " + std::to_string(row.seeds[i]) + " (" + row.artifacts[i] + "/" +
                            file + ")");
        }
      }
    }
  }
  if (!missing.empty()) throw MissingArtifactError("missing run artifacts: " + join(missing, ';'));

  BalanceReport report;
  report.test_range = test_window(dataset, config.a2c.test_days);
  for (const auto& row : rows) {
    if (!(row.test_range == report.test_range)) {
      throw ValidationError(row.name + " was tested on a different day range than the current configuration");
    }
  }
  report.reference = reference_balance(dataset, config.env, report.test_range);
  for (auto& row : rows) (row.battery_capacity ? report.sweep : report.rows).push_back(std::move(row));
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const StrategyRow& a, const StrategyRow& b) {
    return std::make_pair(row_rank(a.name), a.name) < std::make_pair(row_rank(b.name), b.name);
  });
  std::stable_sort(report.sweep.begin(), report.sweep.end(),
                   [](const StrategyRow& a, const StrategyRow& b) { return *a.battery_capacity < *b.battery_capacity; });

  const fs::path dir = out_dir / "report";
  {
    auto out = csv::open_output(dir / "balances.csv");
    out << "strategy,label,mean,std,n,incomes\n";
    out << "reference,Reference," << csv::format(report.reference) << ",0,1," << csv::format(report.reference) << '\n';
    for (const auto& r : report.rows) {
      out << r.name << ",\"" << r.label << "\"," << csv::format(r.mean()) << ',' << csv::format(r.std()) << ','
          << r.incomes.size() << ',';
      std::vector<std::string> items;
      for (double v : r.incomes) items.push_back(csv::format(v));
      out << join(items, ';') << '\n';
    }
  }
  if (!report.sweep.empty()) {
    auto out = csv::open_output(dir / "battery_sweep.csv");
    out << "battery_capacity,mean,std,n,incomes\n";
    for (const auto& r : report.sweep) {
      std::vector<std::string> items;
      for (double v : r.incomes) items.push_back(csv::format(v));
      out << csv::format(*r.battery_capacity) << ',' << csv::format(r.mean()) << ',' << csv::format(r.std()) << ','
          << r.incomes.size() << ',' << join(items, ';') << '\n';
    }
  }

  json j;
  j["reference"] = report.reference;
  j["test_range"] = {report.test_range.begin, report.test_range.end};
  j["rows"] = json::array();
  for (const auto* group : {&report.rows, &report.sweep}) {
    for (const auto& r : *group) {
      json e = {{"name", r.name}, {"label", r.label},     {"mean", r.mean()},      {"std", r.std()},
                {"seeds", r.seeds}, {"incomes", r.incomes}, {"artifacts", r.artifacts}};
      if (r.battery_capacity) e["battery_capacity"] = *r.battery_capacity;
      j["rows"].push_back(e);
    }
  }
  write_text(dir / "balances.json", j.dump(2) + "\n");

  const int days = std::min(config.report_window_days, report.test_range.size());
  const int start = config.report_window_start >= 0
                        ? config.report_window_start
                        : report.test_range.begin + (report.test_range.size() - days) / 2;
  const DayRange window{start, start + days};
  if (!(window.begin >= report.test_range.begin && window.end <= report.test_range.end)) {
    throw ValidationError("report window lies outside the test range");
  }
  for (const auto& r : report.rows) write_traces(out_dir, r, window);
  return report;
}

void write_manifest(const ExperimentConfig& config, const Dataset& dataset, const fs::path& out_dir) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(dataset.content_hash()));
  json runs = json::array();
  for (const auto& row : load_rows(out_dir)) {
    for (std::size_t i = 0; i < row.seeds.size(); ++i) {
      json run = {{"name", row.name},
                  {"seed", row.seeds[i]},
                  {"run_seed", run_seed(config, row.seeds[i])},
                  {"artifacts", row.artifacts[i]}};
      if (fs::exists(out_dir / row.artifacts[i] / "policy.json")) {
        run["checkpoint"] = row.artifacts[i] + "/policy.json";
      } else {
        run["checkpoint"] = row.artifacts[i] + "/strategy.json";
      }
      runs.push_back(run);
    }
  }
  const json j = {{"format", "dabid-manifest"},
                  {"version", 1},
                  {"config", to_key_values(config)},
                  {"seeds", config.seeds},
                  {"data_hash", hash},
                  {"runs", runs}};
  write_text(out_dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace dabid
