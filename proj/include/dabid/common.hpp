#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dabid {

// Error hierarchy. The CLI maps ValidationError (and its subclasses) to exit
// code 2 and MissingArtifactError to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;
using Date = std::chrono::year_month_day;

// Named sub-streams of a run's master seed.
enum class Stream : std::uint64_t {
  kWeather = 1,
  kPrices = 2,
  kForecast = 3,
  kConsumption = 4,
  kPolicyNoise = 5,
  kOptimizer = 6,
  kInit = 7,
  kWindows = 8,
};

// SplitMix64 finalizer over (parent, stream); children of distinct streams are
// statistically independent and re-derivable from the parent alone.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

inline std::uint64_t derive_seed(std::uint64_t parent, Stream stream) {
  return derive_seed(parent, static_cast<std::uint64_t>(stream));
}

inline Rng make_rng(std::uint64_t parent, Stream stream) {
  return Rng(derive_seed(parent, stream));
}

// ISO-8601 YYYY-MM-DD.
std::string format_date(const Date& date);
Date parse_date(const std::string& text);

Date add_days(const Date& date, int days);
int days_between(const Date& from, const Date& to);

// 0 = Monday ... 6 = Sunday.
int weekday_index(const Date& date);
// 0 = January ... 11 = December.
int month_index(const Date& date);
// 0..3
int quarter_index(const Date& date);

// Round half away from zero to one decimal; values that round to zero are 0.
double round_volume(double volume);

}  // namespace dabid
