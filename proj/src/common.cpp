#include "newsflow/common.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <iostream>
#include <mutex>

namespace newsflow {

namespace {

int parse_int(std::string_view text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error("invalid date component '" + std::string(text) + "'");
  }
  return value;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

bool looks_like_date(std::string_view text) {
  text = trim(text);
  if (text.size() < 10) return false;
  for (std::size_t i = 0; i < 10; ++i) {
    const bool dash = (i == 4 || i == 7);
    if (dash ? text[i] != '-' : !std::isdigit(static_cast<unsigned char>(text[i]))) return false;
  }
  return text.size() == 10 || text[10] == 'T' || text[10] == ' ';
}

Date parse_date(std::string_view text) {
  text = trim(text);
  if (!looks_like_date(text)) {
    throw Error("expected ISO-8601 date, got '" + std::string(text) + "'");
  }
  const Date date{std::chrono::year{parse_int(text.substr(0, 4))},
                  std::chrono::month{static_cast<unsigned>(parse_int(text.substr(5, 2)))},
                  std::chrono::day{static_cast<unsigned>(parse_int(text.substr(8, 2)))}};
  if (!date.ok()) throw Error("invalid calendar date '" + std::string(text.substr(0, 10)) + "'");
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  return text;
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt) {
  // FNV-1a over the salt, then splitmix to decorrelate.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : salt) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt + 0x632be59bd9b4e019ULL));
}

void set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace newsflow
