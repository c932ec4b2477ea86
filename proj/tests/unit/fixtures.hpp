#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "dabid/datahub.hpp"

namespace dabid::testing {

// Constant-weather dataset for hand-checkable scenarios. Forecasts equal the
// actual weather.
inline Dataset flat_dataset(int days, double price, int cloudiness, double wind_speed, double household_mwh,
                            double temperature = 10.0) {
  Dataset d;
  const Date start{std::chrono::year{2019}, std::chrono::March, std::chrono::day{4}};  // a Monday
  for (int day = 0; day < days; ++day) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      HourlyRecord r;
      r.date = add_days(start, day);
      r.hour = h;
      r.price = price;
      r.cloudiness = cloudiness;
      r.wind_speed = wind_speed;
      r.temperature = temperature;
      d.records.push_back(r);
      ForecastRecord f;
      f.issue_date = add_days(start, day - 1);
      f.target_date = r.date;
      f.target_hour = h;
      f.cloudiness = cloudiness;
      f.wind_speed = wind_speed;
      f.temperature = temperature;
      d.forecasts.push_back(f);
    }
  }
  d.profile.avg_per_household.fill(household_mwh);
  return d;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dabid_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace dabid::testing
