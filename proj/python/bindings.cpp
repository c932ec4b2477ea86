// Python bindings for the dabid core: datasets, the market environment,
// strategies, the optimizers and the experiment runners.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dabid/experiment.hpp"

namespace py = pybind11;
using namespace dabid;

namespace {

KeyValues to_key_values(const py::dict& values) {
  KeyValues out;
  for (const auto& [k, v] : values) out[py::str(k)] = py::str(v);
  return out;
}

ExperimentConfig config_from(const py::object& config) {
  if (config.is_none()) return ExperimentConfig{};
  if (py::isinstance<py::dict>(config)) {
    return experiment_config_from(to_key_values(config.cast<py::dict>()));
  }
  return load_experiment_config(py::str(config).cast<std::string>());
}

ActionMatrix action_from(const Eigen::VectorXd& action) {
  if (action.size() != kActionSize) throw ValidationError("actions have 96 entries");
  return clip_action(action);
}

py::dict row_dict(const StrategyRow& r) {
  py::dict d;
  d["name"] = r.name;
  d["label"] = r.label;
  d["seeds"] = r.seeds;
  d["incomes"] = r.incomes;
  d["mean"] = r.mean();
  d["std"] = r.std();
  d["artifacts"] = r.artifacts;
  if (r.battery_capacity) d["battery_capacity"] = *r.battery_capacity;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dabid, m) {
  m.doc() = "Day-ahead electricity market bidding lab";

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<MissingArtifactError>(m, "MissingArtifactError", PyExc_FileNotFoundError);

  // ---------------------------------------------------------------- data
  py::class_<Dataset, std::shared_ptr<Dataset>>(m, "Dataset")
      .def_property_readonly("num_days", &Dataset::num_days)
      .def_property_readonly("has_forecasts", &Dataset::has_forecasts)
      .def("content_hash", &Dataset::content_hash)
      .def("price", &Dataset::price, py::arg("day"), py::arg("hour"))
      .def("start_date", [](const Dataset& d) { return format_date(d.start_date()); })
      .def("split", [](const Dataset& d) {
        const auto& s = d.split();
        return py::dict(py::arg("train") = py::make_tuple(s.train.begin, s.train.end),
                        py::arg("validation") = py::make_tuple(s.validation.begin, s.validation.end),
                        py::arg("test") = py::make_tuple(s.test.begin, s.test.end));
      })
      .def("write", [](const Dataset& d, const std::filesystem::path& dir) { write_dataset(d, dir); });

  m.def(
      "generate_dataset",
      [](std::uint64_t seed, int days, bool forecasts, bool split) {
        Dataset d = generate_synthetic_dataset(seed, days);
        if (forecasts) d = make_forecasts(d, {}, derive_seed(seed, Stream::kForecast));
        if (split) d = split_dataset(std::move(d));
        return std::make_shared<Dataset>(std::move(d));
      },
      py::arg("seed"), py::arg("days"), py::arg("forecasts") = true, py::arg("split") = true);

  m.def(
      "prepare_dataset", [](const py::object& config) { return std::make_shared<Dataset>(prepare_dataset(config_from(config))); },
      py::arg("config") = py::none());

  // ---------------------------------------------------------------- market
  m.def("clear_bid", [](double volume, double price, const std::string& side, double market) {
    if (side != "buy" && side != "sell") throw ValidationError("side is 'buy' or 'sell'");
    return clear_bid({volume, price, side == "buy" ? BidType::kBuy : BidType::kSell, 0}, market);
  });
  m.def("hourly_solar", [](int cloudiness) { return hourly_solar(EnvConfig{}, cloudiness); });
  m.def("hourly_wind", [](double wind_speed) { return hourly_wind(EnvConfig{}, wind_speed); });
  m.def("hourly_consumption", [](double avg_per_household, double rho) {
    return hourly_consumption(EnvConfig{}, avg_per_household, rho);
  });
  m.def(
      "reference_balance",
      [](const Dataset& d, int begin, int end) { return reference_balance(d, EnvConfig{}, {begin, end}); },
      py::arg("dataset"), py::arg("begin"), py::arg("end"));

  py::class_<MarketEnv>(m, "MarketEnv")
      .def(py::init([](std::shared_ptr<Dataset> d, const py::dict& overrides, bool include_weather) {
             EnvConfig config;
             apply_overrides(config, to_key_values(overrides));
             validate(config);
             return MarketEnv(std::move(d), config, include_weather);
           }),
           py::arg("dataset"), py::arg("config") = py::dict(), py::arg("include_weather") = true)
      .def("reset", &MarketEnv::reset, py::arg("decision_day"), py::arg("seed"))
      .def(
          "step",
          [](MarketEnv& env, const Eigen::VectorXd& action) {
            const StepOutcome out = env.step(blackbox_bids(action_from(action), env.max_volume(), env.next_price_anchors()));
            return py::make_tuple(out.observation, out.reward, out.terminal);
          },
          py::arg("action"), "Applies a 96-value black-box action; returns (observation, reward, terminal).")
      .def_property_readonly("observation_size", &MarketEnv::observation_size)
      .def_property_readonly("battery_level", [](const MarketEnv& e) { return e.state().battery_charge(e.config()); })
      .def_property_readonly("day", [](const MarketEnv& e) { return e.state().day; });

  // ---------------------------------------------------------------- strategies
  m.def(
      "evaluate_strategy",
      [](const std::string& strategy_json, const Dataset& d, int begin, int end, std::uint64_t seed,
         const std::filesystem::path& base_dir) {
        const auto strategy = make_strategy(strategy_from_json(strategy_json), base_dir);
        return evaluate_strategy(*strategy, d, {begin, end}, EnvConfig{}, seed).total;
      },
      py::arg("strategy_json"), py::arg("dataset"), py::arg("begin"), py::arg("end"), py::arg("seed"),
      py::arg("base_dir") = std::filesystem::path());

  // ---------------------------------------------------------------- optimizers
  m.def("default_population", &default_population);
  m.def(
      "cmaes_maximize",
      [](const std::function<double(const Eigen::VectorXd&)>& f, int dimension, int generations,
         std::uint64_t seed, double sigma, std::vector<double> initial_mean) {
        CmaesConfig config;
        config.generations = generations;
        config.seed = seed;
        config.initial_sigma = sigma;
        config.initial_mean = std::move(initial_mean);
        const CmaesResult r = cmaes_maximize(f, dimension, config);
        return py::dict(py::arg("mean") = r.mean, py::arg("best") = r.best, py::arg("best_value") = r.best_value,
                        py::arg("sigma") = r.final_sigma);
      },
      py::arg("objective"), py::arg("dimension"), py::arg("generations") = 100, py::arg("seed") = 0,
      py::arg("sigma") = 1.0, py::arg("initial_mean") = std::vector<double>{});
  m.def(
      "compute_gae",
      [](const std::vector<double>& rewards, const std::vector<double>& values, std::vector<bool> episode_end,
         double last_value, double gamma, double lam) {
        std::vector<char> ends(episode_end.begin(), episode_end.end());
        return compute_gae(rewards, values, ends, last_value, gamma, lam);
      },
      py::arg("rewards"), py::arg("values"), py::arg("episode_end"), py::arg("last_value"), py::arg("gamma"),
      py::arg("lam"));

  // ---------------------------------------------------------------- experiments
  m.def(
      "optimize",
      [](const Dataset& d, const py::object& config, const std::string& strategy, const std::filesystem::path& out) {
        const auto outcome = run_optimize(d, config_from(config), parse_strategy_kind(strategy), out);
        return py::make_tuple(row_dict(outcome.optimized), row_dict(outcome.initial));
      },
      py::arg("dataset"), py::arg("config"), py::arg("strategy"), py::arg("out"));
  m.def(
      "train_rl",
      [](const Dataset& d, const py::object& config, bool include_weather, const std::filesystem::path& out) {
        return row_dict(run_train_rl(d, config_from(config), include_weather, out));
      },
      py::arg("dataset"), py::arg("config"), py::arg("include_weather") = true, py::arg("out"));
  m.def(
      "evaluate_zero_action",
      [](const Dataset& d, const py::object& config, const std::filesystem::path& out) {
        StrategyDocument doc;
        doc.kind = StrategyKind::kZeroAction;
        return row_dict(run_evaluate(d, config_from(config), doc, {}, "zero_action", out));
      },
      py::arg("dataset"), py::arg("config"), py::arg("out"));
  m.def(
      "sweep_battery",
      [](const Dataset& d, const py::object& config, const std::filesystem::path& out) {
        py::list rows;
        for (const auto& r : run_battery_sweep(d, config_from(config), out)) rows.append(row_dict(r));
        return rows;
      },
      py::arg("dataset"), py::arg("config"), py::arg("out"));
  m.def(
      "report",
      [](const Dataset& d, const py::object& config, const std::filesystem::path& out) {
        const ExperimentConfig c = config_from(config);
        const BalanceReport r = assemble_report(d, c, out);
        write_manifest(c, d, out);
        py::list rows;
        for (const auto& row : r.rows) rows.append(row_dict(row));
        py::list sweep;
        for (const auto& row : r.sweep) sweep.append(row_dict(row));
        return py::dict(py::arg("reference") = r.reference, py::arg("rows") = rows, py::arg("sweep") = sweep);
      },
      py::arg("dataset"), py::arg("config"), py::arg("out"));
}
