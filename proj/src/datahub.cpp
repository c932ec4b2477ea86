#include "dabid/datahub.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "csv.hpp"

namespace dabid {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double round_to(double value, double step) { return std::round(value / step) * step; }

// Gaussian bump on the 24-hour circle.
double bump(double hour, double center, double width) {
  double d = std::fabs(hour - center);
  d = std::min(d, 24.0 - d);
  return std::exp(-0.5 * (d / width) * (d / width));
}

class Fnv1a {
 public:
  void add(std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= (word >> (8 * i)) & 0xffU;
      hash_ *= 0x100000001b3ULL;
    }
  }
  void add(double value) { add(std::bit_cast<std::uint64_t>(value)); }
  void add(int value) { add(static_cast<std::uint64_t>(static_cast<std::int64_t>(value))); }
  void add(const Date& date) { add(static_cast<int>(std::chrono::sys_days{date}.time_since_epoch().count())); }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string where(const std::filesystem::path& path, int line) {
  return path.filename().string() + ":" + std::to_string(line);
}

}  // namespace

double ConsumptionProfile::peak() const {
  return *std::max_element(avg_per_household.begin(), avg_per_household.end());
}

double ConsumptionProfile::daily_total() const {
  double total = 0.0;
  for (double v : avg_per_household) total += v;
  return total;
}

ConsumptionProfile ConsumptionProfile::default_profile() {
  // kWh per household for hours 0..23.
  constexpr std::array<double, kHoursPerDay> kwh = {0.20, 0.17, 0.15, 0.15, 0.15, 0.18, 0.26, 0.34,
                                                    0.32, 0.28, 0.27, 0.28, 0.30, 0.29, 0.28, 0.29,
                                                    0.34, 0.44, 0.52, 0.55, 0.53, 0.46, 0.36, 0.26};
  ConsumptionProfile profile;
  for (int h = 0; h < kHoursPerDay; ++h) profile.avg_per_household[h] = kwh[h] / 1000.0;
  return profile;
}

const SplitBoundaries& Dataset::split() const {
  if (!splits) {
    throw ValidationError("dataset has no train/validation/test split");
  }
  return *splits;
}

double Dataset::mean_price(DayRange range) const {
  double sum = 0.0;
  for (int d = range.begin; d < range.end; ++d) {
    for (int h = 0; h < kHoursPerDay; ++h) sum += price(d, h);
  }
  return range.empty() ? 0.0 : sum / (range.size() * kHoursPerDay);
}

std::uint64_t Dataset::content_hash() const {
  Fnv1a fnv;
  for (const auto& r : records) {
    fnv.add(r.date);
    fnv.add(r.hour);
    fnv.add(r.price);
    fnv.add(r.cloudiness);
    fnv.add(r.wind_speed);
    fnv.add(r.temperature);
  }
  for (const auto& f : forecasts) {
    fnv.add(f.issue_date);
    fnv.add(f.target_date);
    fnv.add(f.target_hour);
    fnv.add(f.cloudiness);
    fnv.add(f.wind_speed);
    fnv.add(f.temperature);
  }
  for (double v : profile.avg_per_household) fnv.add(v);
  return fnv.value();
}

void validate(const Dataset& dataset) {
  if (dataset.records.empty() || dataset.records.size() % kHoursPerDay != 0) {
    throw SchemaError("dataset must contain whole days of 24 hourly records");
  }
  const Date start = dataset.records.front().date;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    const int day = static_cast<int>(i) / kHoursPerDay;
    const int hour = static_cast<int>(i) % kHoursPerDay;
    if (r.date != add_days(start, day) || r.hour != hour) {
      throw SchemaError("gap in hourly records: missing " + format_date(add_days(start, day)) + " hour " +
                        std::to_string(hour) + " (day " + std::to_string(day + 1) + ")");
    }
    if (r.cloudiness < 0 || r.cloudiness > kMaxOktas) {
      throw ValidationError("cloudiness " + std::to_string(r.cloudiness) + " outside 0..8 on " + format_date(r.date));
    }
    if (!(r.wind_speed >= 0.0) || !(r.price >= 0.0) || !std::isfinite(r.temperature)) {
      throw ValidationError("negative or non-finite weather/price value on " + format_date(r.date));
    }
  }
  for (double v : dataset.profile.avg_per_household) {
    if (!(v >= 0.0)) throw ValidationError("consumption profile values must be nonnegative");
  }
  if (!dataset.forecasts.empty()) {
    if (dataset.forecasts.size() != dataset.records.size()) {
      throw SchemaError("forecasts must cover every day of the dataset");
    }
    for (std::size_t i = 0; i < dataset.forecasts.size(); ++i) {
      const auto& f = dataset.forecasts[i];
      const auto& r = dataset.records[i];
      if (f.target_date != r.date || f.target_hour != r.hour || f.issue_date != add_days(r.date, -1)) {
        throw SchemaError("missing forecast for " + format_date(r.date) + " hour " + std::to_string(r.hour));
      }
      if (f.cloudiness < 0 || f.cloudiness > kMaxOktas || !(f.wind_speed >= 0.0)) {
        throw ValidationError("forecast outside variable domain for " + format_date(r.date));
      }
    }
  }
  if (dataset.splits) {
    const auto& s = *dataset.splits;
    const int n = dataset.num_days();
    for (const DayRange* r : {&s.train, &s.validation, &s.test}) {
      if (r->empty() || r->begin < 0 || r->end > n) {
        throw ValidationError("split range outside dataset or empty");
      }
    }
    if (s.train.end > s.validation.begin || s.validation.end > s.test.begin) {
      throw ValidationError("split ranges must be disjoint and ordered train < validation < test");
    }
  }
}

Dataset load_dataset(const std::filesystem::path& price_path, const std::filesystem::path& weather_path,
                     const std::filesystem::path& profile_path) {
  const auto prices = csv::read(price_path, {"date", "hour", "price"});
  const auto weather = csv::read(weather_path, {"date", "hour", "cloudiness", "wind_speed", "temperature"});
  const auto profile = csv::read(profile_path, {"hour", "avg_consumption_mwh"});

  Dataset dataset;
  dataset.records.reserve(prices.rows.size());
  for (std::size_t i = 0; i < prices.rows.size(); ++i) {
    const auto& row = prices.rows[i];
    const auto w = where(price_path, prices.line_numbers[i]);
    HourlyRecord r;
    r.date = parse_date(row[0]);
    r.hour = csv::to_int(row[1], w);
    r.price = csv::to_double(row[2], w);
    dataset.records.push_back(r);
  }
  if (dataset.records.empty()) {
    throw SchemaError(price_path.filename().string() + ": no records");
  }
  // Gap check on prices alone first so the error names the price file's hole.
  const Date start = dataset.records.front().date;
  for (std::size_t i = 0; i < dataset.records.size() || i % kHoursPerDay != 0; ++i) {
    const int day = static_cast<int>(i) / kHoursPerDay;
    const int hour = static_cast<int>(i) % kHoursPerDay;
    if (i >= dataset.records.size() || dataset.records[i].date != add_days(start, day) ||
        dataset.records[i].hour != hour) {
      throw SchemaError(price_path.filename().string() + ": gap at day " + std::to_string(day + 1) + " (" +
                        format_date(add_days(start, day)) + "), hour " + std::to_string(hour) + " missing");
    }
  }

  if (weather.rows.size() != dataset.records.size()) {
    throw SchemaError(weather_path.filename().string() + ": expected " + std::to_string(dataset.records.size()) +
                      " rows matching prices");
  }
  for (std::size_t i = 0; i < weather.rows.size(); ++i) {
    const auto& row = weather.rows[i];
    const auto w = where(weather_path, weather.line_numbers[i]);
    auto& r = dataset.records[i];
    const Date date = parse_date(row[0]);
    const int hour = csv::to_int(row[1], w);
    if (date != r.date || hour != r.hour) {
      throw SchemaError(w + ": weather row " + row[0] + " hour " + row[1] + " does not align with prices (expected " +
                        format_date(r.date) + " hour " + std::to_string(r.hour) + ")");
    }
    r.cloudiness = csv::to_int(row[2], w);
    r.wind_speed = csv::to_double(row[3], w);
    r.temperature = csv::to_double(row[4], w);
  }

  if (profile.rows.size() != kHoursPerDay) {
    throw SchemaError(profile_path.filename().string() + ": expected 24 hourly rows");
  }
  for (std::size_t i = 0; i < profile.rows.size(); ++i) {
    const auto w = where(profile_path, profile.line_numbers[i]);
    const int hour = csv::to_int(profile.rows[i][0], w);
    if (hour != static_cast<int>(i)) {
      throw SchemaError(w + ": profile hours must be 0..23 in order");
    }
    dataset.profile.avg_per_household[i] = csv::to_double(profile.rows[i][1], w);
  }
  validate(dataset);
  return dataset;
}

void load_forecasts(Dataset& dataset, const std::filesystem::path& forecast_path) {
  const auto table = csv::read(forecast_path, {"issue_date", "target_date", "target_hour", "cloudiness",
                                               "wind_speed", "temperature"});
  std::vector<ForecastRecord> forecasts;
  forecasts.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const auto w = where(forecast_path, table.line_numbers[i]);
    ForecastRecord f;
    f.issue_date = parse_date(row[0]);
    f.target_date = parse_date(row[1]);
    f.target_hour = csv::to_int(row[2], w);
    f.cloudiness = csv::to_int(row[3], w);
    f.wind_speed = csv::to_double(row[4], w);
    f.temperature = csv::to_double(row[5], w);
    forecasts.push_back(f);
  }
  Dataset candidate = dataset;
  candidate.forecasts = std::move(forecasts);
  validate(candidate);
  dataset = std::move(candidate);
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) {
    throw Error("cannot create output directory " + directory.string() + ": " + ec.message());
  }
  auto prices = csv::open_output(directory / "prices.csv");
  auto weather = csv::open_output(directory / "weather.csv");
  prices << "date,hour,price\n";
  weather << "date,hour,cloudiness,wind_speed,temperature\n";
  for (const auto& r : dataset.records) {
    const auto date = format_date(r.date);
    prices << date << ',' << r.hour << ',' << csv::format(r.price) << '\n';
    weather << date << ',' << r.hour << ',' << r.cloudiness << ',' << csv::format(r.wind_speed) << ','
            << csv::format(r.temperature) << '\n';
  }
  auto profile = csv::open_output(directory / "profile.csv");
  profile << "hour,avg_consumption_mwh\n";
  for (int h = 0; h < kHoursPerDay; ++h) {
    profile << h << ',' << csv::format(dataset.profile.avg_per_household[h]) << '\n';
  }
  if (dataset.has_forecasts()) {
    auto forecasts = csv::open_output(directory / "forecasts.csv");
    forecasts << "issue_date,target_date,target_hour,cloudiness,wind_speed,temperature\n";
    for (const auto& f : dataset.forecasts) {
      forecasts << format_date(f.issue_date) << ',' << format_date(f.target_date) << ',' << f.target_hour << ','
                << f.cloudiness << ',' << csv::format(f.wind_speed) << ',' << csv::format(f.temperature) << '\n';
    }
  }
  if (!prices || !weather || !profile) {
    throw Error("failed writing dataset files to " + directory.string());
  }
}

Dataset generate_synthetic_dataset(std::uint64_t seed, int num_days, const GeneratorConfig& config) {
  if (num_days < kMinSyntheticDays) {
    throw ValidationError("synthetic datasets need at least " + std::to_string(kMinSyntheticDays) +
                          " days (two 28-day warm-up windows), got " + std::to_string(num_days));
  }
  Rng weather_rng = make_rng(seed, Stream::kWeather);
  Rng price_rng = make_rng(seed, Stream::kPrices);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Hourly AR(1) latent weather processes with unit stationary variance.
  constexpr double kCloudPhi = 0.95;
  constexpr double kWindPhi = 0.96;
  constexpr double kTempPhi = 0.98;
  double cloud_z = normal(weather_rng);
  double wind_z = normal(weather_rng);
  double temp_z = normal(weather_rng);
  double level = 0.0;

  Dataset dataset;
  dataset.profile = config.profile;
  dataset.records.reserve(static_cast<std::size_t>(num_days) * kHoursPerDay);

  for (int d = 0; d < num_days; ++d) {
    const Date date = add_days(config.start_date, d);
    const auto year_start = Date{date.year(), std::chrono::January, std::chrono::day{1}};
    const double day_of_year = days_between(year_start, date);
    // +1 in mid-January, -1 in mid-July.
    const double winter = std::cos(kTwoPi * (day_of_year - 15.0) / 365.25);
    const bool weekend = weekday_index(date) >= 5;

    level = config.daily_level_persistence * level + config.daily_level_sigma * normal(price_rng);
    const double evening_center = 18.8 - 0.8 * winter;

    for (int h = 0; h < kHoursPerDay; ++h) {
      cloud_z = kCloudPhi * cloud_z + std::sqrt(1.0 - kCloudPhi * kCloudPhi) * normal(weather_rng);
      wind_z = kWindPhi * wind_z + std::sqrt(1.0 - kWindPhi * kWindPhi) * normal(weather_rng);
      temp_z = kTempPhi * temp_z + std::sqrt(1.0 - kTempPhi * kTempPhi) * normal(weather_rng);

      HourlyRecord r;
      r.date = date;
      r.hour = h;
      r.cloudiness = static_cast<int>(std::clamp(std::round(config.mean_cloudiness + 1.0 * winter + 2.6 * cloud_z),
                                                 0.0, static_cast<double>(kMaxOktas)));
      r.wind_speed = round_to(std::max(0.0, config.mean_wind_speed + 0.8 * winter + 2.4 * wind_z), 0.01);
      r.temperature = round_to(config.mean_temperature - 10.0 * winter +
                                   4.0 * std::sin(kTwoPi * (h - 9.0) / 24.0) + 3.0 * temp_z,
                               0.1);

      double shape = 0.95 - 0.28 * bump(h, 2.5, 2.2) + 0.18 * bump(h, 8.5, 1.8) +
                     0.38 * bump(h, evening_center, 1.8);
      if (weekend) shape = config.weekend_factor * (1.0 + 0.6 * (shape - 1.0));
      const double daylight = bump(h, 13.0, 3.5);
      const double weather_term =
          -config.wind_price_coupling * (r.wind_speed - config.mean_wind_speed) / 2.4 -
          config.solar_price_coupling * daylight * (0.35 - r.cloudiness / 8.0) / 0.3 +
          config.cold_price_coupling * std::max(0.0, 5.0 - r.temperature) / 10.0;
      const double price = config.base_price * shape * (1.0 + config.seasonal_price_amplitude * winter) *
                           std::exp(level + weather_term + config.hourly_price_sigma * normal(price_rng));
      r.price = round_to(std::max(0.0, price), 0.01);
      dataset.records.push_back(r);
    }
  }
  validate(dataset);
  return dataset;
}

Dataset make_forecasts(const Dataset& dataset, const ForecastSigmas& sigmas, std::uint64_t seed,
                       const ForecastOptions& options) {
  if (sigmas.cloudiness < 0.0 || sigmas.wind_speed < 0.0 || sigmas.temperature < 0.0) {
    throw ValidationError("forecast sigmas must be nonnegative");
  }
  Dataset out = dataset;
  const int n = dataset.num_days();
  out.forecasts.assign(dataset.records.size(), ForecastRecord{});
  if (options.deviations) {
    options.deviations->values.assign(dataset.records.size() * 3, 0.0);
  }
  const std::array<double, 3> step_scale = {sigmas.cloudiness / std::sqrt(24.0), sigmas.wind_speed / std::sqrt(24.0),
                                            sigmas.temperature / std::sqrt(24.0)};
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::array<double, kHoursPerDay * 3> kept{};
  for (int target = 0; target < n; ++target) {
    for (int v = 0; v < 3; ++v) {
      double deviation = 0.0;
      for (int t = 1; t <= kForecastSteps; ++t) {
        deviation += step_scale[v] * normal(rng);
        if (t >= kFirstKeptStep) kept[(t - kFirstKeptStep) * 3 + v] = deviation;
      }
    }
    for (int h = 0; h < kHoursPerDay; ++h) {
      const auto& actual = dataset.at(target, h);
      const double dc = kept[h * 3 + 0];
      const double dw = kept[h * 3 + 1];
      const double dt = kept[h * 3 + 2];
      ForecastRecord f;
      f.issue_date = add_days(actual.date, -1);
      f.target_date = actual.date;
      f.target_hour = h;
      double cloud = actual.cloudiness + dc;
      double wind = actual.wind_speed + dw;
      if (options.clip) {
        cloud = std::round(std::clamp(cloud, 0.0, static_cast<double>(kMaxOktas)));
        wind = std::max(0.0, wind);
      }
      f.cloudiness = static_cast<int>(std::round(cloud));
      f.wind_speed = wind;
      f.temperature = actual.temperature + dt;
      out.forecasts[static_cast<std::size_t>(target) * kHoursPerDay + h] = f;
      if (options.deviations) {
        auto* slot = &options.deviations->values[(static_cast<std::size_t>(target) * kHoursPerDay + h) * 3];
        slot[0] = dc;
        slot[1] = dw;
        slot[2] = dt;
      }
    }
  }
  return out;
}

Dataset split_dataset(Dataset dataset, const SplitBoundaries& boundaries) {
  dataset.splits = boundaries;
  validate(dataset);
  return dataset;
}

Dataset split_dataset(Dataset dataset) {
  // Boundaries of calendar quarters intersected with the dataset.
  std::vector<int> starts;
  for (int d = 0; d < dataset.num_days(); ++d) {
    const Date date = dataset.date(d);
    if (d == 0 || (static_cast<unsigned>(date.day()) == 1 && month_index(date) % 3 == 0)) {
      starts.push_back(d);
    }
  }
  const int quarters = static_cast<int>(starts.size());
  if (quarters < 3) {
    throw ValidationError("default split needs at least three calendar quarters of data");
  }
  const int test_q = std::max(1, static_cast<int>(std::lround(quarters * 4.0 / 16.0)));
  const int val_q = std::max(1, static_cast<int>(std::lround(quarters * 1.0 / 16.0)));
  const int train_q = quarters - test_q - val_q;
  if (train_q < 1) {
    throw ValidationError("default split leaves no training quarters");
  }
  starts.push_back(dataset.num_days());
  SplitBoundaries s;
  s.train = {starts[0], starts[train_q]};
  s.validation = {starts[train_q], starts[train_q + val_q]};
  s.test = {starts[train_q + val_q], starts[quarters]};
  return split_dataset(std::move(dataset), s);
}

}  // namespace dabid
