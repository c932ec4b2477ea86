// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//
//   dabid_acceptance [--work-dir DIR] [--only 1,2,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "dabid/experiment.hpp"

namespace fs = std::filesystem;
using namespace dabid;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------- 1

Outcome clearing_grid() {
  const auto start = Clock::now();
  int mismatches = 0;
  int cases = 0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      const double bid = 4.0 * i;
      const double market = 4.0 * j + (j % 3 == 0 ? 0.0 : 1.5);
      // Buy: the market price is not above the bid; sell: not below it.
      const bool buy_ok = market <= bid;
      const bool sell_ok = market >= bid;
      mismatches += clear_bid({0.5, bid, BidType::kBuy, 0}, market) != buy_ok;
      mismatches += clear_bid({0.5, bid, BidType::kSell, 0}, market) != sell_ok;
      cases += 2;
    }
  }
  const double t = seconds_since(start);
  return {mismatches == 0 && t < 1.0,
          std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches, " + fmt("%.3f s", t)};
}

// ---------------------------------------------------------------- 2

Outcome formulas() {
  const EnvConfig c;
  struct Case {
    const char* name;
    double got;
    double want;
  };
  const Case cases[] = {
      {"consumption rho=0", hourly_consumption(c, 0.002, 0.0), 0.2},
      {"consumption rho=-2", hourly_consumption(c, 0.002, -2.0), 0.2},
      {"solar c=0", hourly_solar(c, 0), 0.08},
      {"solar c=8", hourly_solar(c, 8), 0.0},
      {"solar c=4", hourly_solar(c, 4), 0.04},
      {"wind 11", hourly_wind(c, 11.0), 0.05},
      {"wind 12", hourly_wind(c, 12.0), 0.0},
      {"wind 5.5", hourly_wind(c, 5.5), 0.025},
  };
  EnvConfig none = c;
  none.households = 0;
  double worst = std::fabs(hourly_consumption(none, 0.002, 0.1));
  std::string bad;
  for (const auto& k : cases) {
    const double err = std::fabs(k.got - k.want);
    if (err > 1e-12) bad += std::string(" ") + k.name;
    worst = std::max(worst, err);
  }
  return {worst <= 1e-12, "9 hand values, max error " + fmt("%.2e", worst) + bad};
}

// ---------------------------------------------------------------- 3

Outcome conservation() {
  const auto start = Clock::now();
  const Dataset d = make_forecasts(generate_synthetic_dataset(21, 500), {}, 3);
  const PriceAnchors anchors(d, 28);
  double worst_energy = 0.0;
  double worst_cash = 0.0;
  int bound_violations = 0;
  long hours = 0;
  Rng rng(77);
  std::normal_distribution<double> n(0.0, 1.2);
  for (double capacity : {2.0, 0.5}) {
    EnvConfig c;
    c.battery_capacity = capacity;
    EnvState s = reset_state(28, d, c, 5);
    while (s.day + 1 < d.num_days()) {
      ActionMatrix a;
      for (int i = 0; i < a.size(); ++i) a.data()[i] = std::clamp(n(rng), -3.0, 3.0);
      const DayResult r = advance_day(s, blackbox_bids(a, max_hourly_production(c), anchors.for_day(s.day + 1)), d, c);
      double previous = r.battery_trace[0];
      for (const HourOutcome& o : r.hours) {
        const double in = o.production + o.buy_executed + o.discharge + o.unscheduled_buy;
        const double out = o.consumption + o.sell_executed + o.charge_input + o.unscheduled_sell;
        worst_energy = std::max(worst_energy, std::fabs(in - out));
        // Stored energy follows the charge efficiency.
        worst_energy = std::max(worst_energy,
                                std::fabs(o.battery_level - (previous + c.battery_efficiency * o.charge_input - o.discharge)));
        const double cash = o.price * (o.sell_executed - o.buy_executed) +
                            c.penalty_sell_multiplier * o.price * o.unscheduled_sell -
                            c.penalty_buy_multiplier * o.price * o.unscheduled_buy;
        worst_cash = std::max(worst_cash, std::fabs(cash - o.cash_delta));
        bound_violations += o.battery_level < 0.0 || o.battery_level > capacity;
        previous = o.battery_level;
        ++hours;
      }
    }
  }
  const double t = seconds_since(start);
  const bool pass = hours >= 10000 && worst_energy <= 1e-9 && worst_cash <= 1e-9 && bound_violations == 0 && t < 30.0;
  return {pass, std::to_string(hours) + " hours, energy " + fmt("%.1e", worst_energy) + ", cash " +
                    fmt("%.1e", worst_cash) + ", bound violations " + std::to_string(bound_violations) + ", " +
                    fmt("%.1f s", t)};
}

// ---------------------------------------------------------------- 4

Outcome gradients() {
  const auto start = Clock::now();
  Rng rng(31);
  std::uniform_int_distribution<int> width(1, 12);
  std::normal_distribution<double> normal(0.0, 0.8);
  double worst = 0.0;
  const int nets = 25;
  for (int trial = 0; trial < nets; ++trial) {
    std::vector<int> sizes{width(rng), width(rng), width(rng)};
    if (trial % 2 == 0) sizes.insert(sizes.begin() + 1, width(rng));
    Mlp net(sizes);
    for (auto& layer : net.layers()) {
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = normal(rng);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = normal(rng);
    }
    Eigen::MatrixXd x(sizes.front(), 2);
    Eigen::MatrixXd g(sizes.back(), 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
    const GradientSet analytic = net.backward(x, g);
    auto loss = [&] { return (net.forward(x).array() * g.array()).sum(); };
    const double h = 1e-5;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      auto probe = [&](double& p, double a) {
        const double saved = p;
        p = saved + h;
        const double up = loss();
        p = saved - h;
        const double down = loss();
        p = saved;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::fabs(fd - a) / std::max(1.0, std::fabs(fd) + std::fabs(a)));
      };
      auto& layer = net.layers()[l];
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) probe(layer.weight.data()[i], analytic.layers[l].weight.data()[i]);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) probe(layer.bias[i], analytic.layers[l].bias[i]);
    }
  }
  const double t = seconds_since(start);
  return {worst < 1e-4 && t < 30.0,
          std::to_string(nets) + " nets, max relative error " + fmt("%.2e", worst) + ", " + fmt("%.2f s", t)};
}

// ---------------------------------------------------------------- 5

Outcome gae_identity() {
  Rng rng(41);
  std::normal_distribution<double> n(0.0, 5.0);
  std::uniform_int_distribution<int> len(1, 150);
  std::bernoulli_distribution ends(0.04);
  double worst = 0.0;
  bool residual_exact = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t size = static_cast<std::size_t>(len(rng));
    std::vector<double> r(size), v(size);
    std::vector<char> e(size);
    for (std::size_t t = 0; t < size; ++t) {
      r[t] = n(rng);
      v[t] = n(rng);
      e[t] = ends(rng) ? 1 : 0;
    }
    const double last = n(rng);
    const double gamma = 0.9;
    const auto a = compute_gae(r, v, e, last, gamma, 1.0);
    double ret = last;
    for (std::size_t t = size; t-- > 0;) {
      ret = r[t] + (e[t] ? 0.0 : gamma * ret);
      worst = std::max(worst, std::fabs(a[t] + v[t] - ret));
    }
    const auto one_step = compute_gae(r, v, e, last, 0.0, 0.9);
    for (std::size_t t = 0; t < size; ++t) residual_exact = residual_exact && one_step[t] == r[t] - v[t];
  }
  return {worst <= 1e-9 && residual_exact, "1000 sequences, max telescoping error " + fmt("%.2e", worst) +
                                               (residual_exact ? ", gamma=0 exact" : ", gamma=0 NOT exact")};
}

// ---------------------------------------------------------------- 6

Outcome cmaes_sphere() {
  const auto start = Clock::now();
  int solved = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CmaesConfig config;
    config.seed = 1234 + seed;
    config.generations = 100;
    const CmaesResult r = cmaes_maximize([](const Eigen::VectorXd& x) { return -x.squaredNorm(); }, 10, config);
    const double f = r.mean.squaredNorm();
    worst = std::max(worst, f);
    solved += f < 1e-8;
  }
  const bool lambda_ok = default_population(2) == 6 && default_population(100) == 17;
  const double t = seconds_since(start);
  return {solved == 5 && lambda_ok && t < 60.0,
          std::to_string(solved) + "/5 seeds below 1e-8 (worst " + fmt("%.2e", worst) + "), lambda(2)=" +
              std::to_string(default_population(2)) + ", lambda(100)=" + std::to_string(default_population(100)) +
              ", " + fmt("%.2f s", t)};
}

// ---------------------------------------------------------------- 7

Outcome forecast_statistics() {
  const auto start = Clock::now();
  const int days = 10'001;
  Dataset d;
  const Date first{std::chrono::year{2000}, std::chrono::January, std::chrono::day{1}};
  d.records.reserve(static_cast<std::size_t>(days) * kHoursPerDay);
  for (int day = 0; day < days; ++day) {
    const Date date = add_days(first, day);
    for (int h = 0; h < kHoursPerDay; ++h) d.records.push_back({date, h, 100.0, 4, 5.0, 10.0});
  }
  d.profile = ConsumptionProfile::default_profile();
  const ForecastSigmas sigmas{2.0, 1.0, 2.0};
  ForecastDeviations deviations;
  make_forecasts(d, sigmas, 99, {.clip = false, .deviations = &deviations});
  // Hour 10 of the target day is 24 steps after the 10 am issuance.
  const double configured[] = {sigmas.cloudiness, sigmas.wind_speed, sigmas.temperature};
  double worst = 0.0;
  std::string detail;
  for (int var = 0; var < 3; ++var) {
    double sum = 0.0;
    double sq = 0.0;
    const int samples = days - 1;
    for (int day = 1; day < days; ++day) {
      const double x = deviations.at(day, 10, var);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / samples;
    const double sd = std::sqrt(sq / samples - mean * mean);
    const double rel = std::fabs(sd / configured[var] - 1.0);
    worst = std::max(worst, rel);
    detail += fmt(" %.3f", sd);
  }
  const double t = seconds_since(start);
  return {worst <= 0.05 && t < 10.0,
          "10000 samples, std (cloud, wind, temp)" + detail + " vs (2, 1, 2), worst deviation " +
              fmt("%.1f%%", 100.0 * worst) + ", " + fmt("%.2f s", t)};
}

// ---------------------------------------------------------------- 8

int run_cli(const std::string& args, const fs::path& log) {
  const std::string command = std::string(DABID_CLI_PATH) + " " + args + " >>" + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(const fs::path& work) {
  const fs::path root = work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "cli.log";

  ExperimentConfig c;
  c.seed = 11;
  c.days = 730;
  c.seeds = {0, 1};
  c.generations = 5;
  c.a2c.total_timesteps = 900;
  c.a2c.eval_frequency = 450;
  c.a2c.net_arch = 16;
  c.a2c.validation_days = 20;
  c.a2c.test_days = 60;
  c.battery_capacities = {1.0, 2.0};
  c.sweep_total_timesteps = 450;
  write_key_values(root / "run.cfg", to_key_values(c));

  const std::vector<std::string> steps = {"optimize --strategy timing", "optimize --strategy opportunistic",
                                          "train-rl", "evaluate --strategy zero_action", "sweep-battery", "report"};
  auto pipeline = [&](const std::string& config, const fs::path& out) {
    for (const auto& s : steps) {
      const int code = run_cli(s + " --config " + config + " --out " + out.string(), log);
      if (code != 0) return s + " exited with " + std::to_string(code);
    }
    return std::string();
  };
  if (auto err = pipeline((root / "run.cfg").string(), root / "first"); !err.empty()) return {false, "first run: " + err};
  const fs::path manifest = root / "first" / "manifest.json";
  if (!fs::exists(manifest)) return {false, "no manifest written"};
  if (auto err = pipeline(manifest.string(), root / "second"); !err.empty()) return {false, "second run: " + err};

  int files = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::recursive_directory_iterator(root / "first" / "report")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "first");
    ++files;
    if (read_file(entry.path()) != read_file(root / "second" / rel)) differing.push_back(rel.string());
  }
  const bool manifests_match = read_file(manifest) == read_file(root / "second" / "manifest.json");
  std::string detail = std::to_string(files) + " report files compared, " + std::to_string(differing.size()) +
                       " differ" + (manifests_match ? ", manifests identical" : ", manifests differ");
  for (const auto& f : differing) detail += " " + f;
  return {files > 0 && differing.empty() && manifests_match, detail};
}

// ---------------------------------------------------------------- 9, 10

struct FullScale {
  ExperimentConfig config;
  Dataset dataset;
  fs::path out;
  StrategyRow timing, timing_initial, opportunistic, a2c, a2c_no_weather, zero;
  std::vector<StrategyRow> sweep;
};

std::string row_text(const StrategyRow& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s %.0f +- %.0f", r.name.c_str(), r.mean(), r.std());
  return buf;
}

FullScale& full_scale(const fs::path& work) {
  static FullScale* state = nullptr;
  if (state) return *state;
  state = new FullScale;
  FullScale& s = *state;
  s.config.seed = 7;
  s.config.days = 1461;
  s.config.seeds = {0, 1, 2, 3, 4};
  s.out = work / "full_scale";
  fs::remove_all(s.out);
  s.dataset = prepare_dataset(s.config);
  const auto t0 = Clock::now();
  auto progress = [&](const char* what) {
    std::cerr << "  [" << fmt("%.0f s", seconds_since(t0)) << "] " << what << '\n';
  };
  auto timing = run_optimize(s.dataset, s.config, StrategyKind::kTiming, s.out);
  s.timing = timing.optimized;
  s.timing_initial = timing.initial;
  progress("timing optimized");
  s.opportunistic = run_optimize(s.dataset, s.config, StrategyKind::kOpportunistic, s.out).optimized;
  progress("opportunistic optimized");
  StrategyDocument zero;
  zero.kind = StrategyKind::kZeroAction;
  s.zero = run_evaluate(s.dataset, s.config, zero, {}, "zero_action", s.out);
  s.a2c = run_train_rl(s.dataset, s.config, true, s.out);
  progress("a2c trained");
  s.a2c_no_weather = run_train_rl(s.dataset, s.config, false, s.out);
  progress("a2c without weather trained");
  return s;
}

Outcome directional(const fs::path& work) {
  FullScale& s = full_scale(work);
  const bool a = s.timing.mean() > s.timing_initial.mean();
  const double pooled = std::sqrt((s.a2c.std() * s.a2c.std() + s.zero.std() * s.zero.std()) / 2.0);
  const double margin = pooled > 0.0 ? (s.a2c.mean() - s.zero.mean()) / pooled : std::numeric_limits<double>::infinity();
  const bool b = margin >= 3.0;
  const bool c = s.a2c.mean() >= s.opportunistic.mean() && s.a2c.mean() >= s.timing.mean();
  const bool d = s.a2c.mean() >= s.a2c_no_weather.mean();
  std::string detail = std::string("(a) ") + (a ? "ok" : "FAIL") + " (b) " + (b ? "ok" : "FAIL") +
                       fmt(" [%.1f pooled std]", margin) + " (c) " + (c ? "ok" : "FAIL") + " (d) " +
                       (d ? "ok" : "WARN, weather ablation not reproduced") + "; ";
  for (const auto* r : {&s.a2c, &s.a2c_no_weather, &s.opportunistic, &s.timing, &s.timing_initial, &s.zero}) {
    detail += row_text(*r) + "; ";
  }
  detail += fmt("reference %.0f", reference_balance(s.dataset, s.config.env, s.a2c.test_range));
  return {a && b && c, detail};
}

Outcome battery_sweep(const fs::path& work) {
  FullScale& s = full_scale(work);
  s.sweep = run_battery_sweep(s.dataset, s.config, s.out);
  bool monotone = s.sweep.size() == 3;
  std::string detail;
  for (std::size_t i = 0; i < s.sweep.size(); ++i) {
    detail += fmt("%.1f MWh: ", *s.sweep[i].battery_capacity) + fmt("%.0f", s.sweep[i].mean()) +
              fmt(" +- %.0f; ", s.sweep[i].std());
    if (i > 0 && s.sweep[i].mean() < s.sweep[i - 1].mean()) monotone = false;
  }
  return {monotone, detail + (monotone ? "non-decreasing" : "NOT non-decreasing")};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "dabid_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work-dir" && i + 1 < argc) {
      work = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) only.insert(std::stoi(item));
    } else {
      std::cerr << "usage: dabid_acceptance [--work-dir DIR] [--only 1,2,...]\n";
      return 2;
    }
  }
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"clearing oracle", clearing_grid},
      {"production and consumption formulas", formulas},
      {"conservation suite", conservation},
      {"gradient correctness", gradients},
      {"GAE identity", gae_identity},
      {"CMA-ES competence", cmaes_sphere},
      {"forecast statistics", forecast_statistics},
      {"determinism", [&] { return determinism(work); }},
      {"directional learning results", [&] { return directional(work); }},
      {"battery sweep shape", [&] { return battery_sweep(work); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d %-36s %s  %s\n", number, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
