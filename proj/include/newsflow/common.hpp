#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace newsflow {

// Base class for every error the library raises. Callers that only need a
// message can catch std::runtime_error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

using Date = std::chrono::year_month_day;

// Accepts "YYYY-MM-DD" optionally followed by a time part ("T..." or " ...").
Date parse_date(std::string_view text);
std::string format_date(const Date& date);
bool looks_like_date(std::string_view text);

std::string_view trim(std::string_view text);

// Stable 64-bit mixing used to derive per-ticker and per-stage seeds from
// one global seed. Independent of std::hash so seeds agree across builds.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Warnings go through a replaceable sink (stderr by default).
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace newsflow
