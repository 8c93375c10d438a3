#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "newsflow/common.hpp"

namespace newsflow::sentiment {

inline constexpr std::size_t kNumSources = 4;

enum class Source { WSJ = 0, CNBC = 1, Fortune = 2, Reuters = 3 };

inline constexpr std::array<Source, kNumSources> kAllSources = {Source::WSJ, Source::CNBC,
                                                                Source::Fortune, Source::Reuters};

std::string_view source_name(Source source);
// Short lowercase key used in CSV headers: "wsj", "cnbc", "fortune", "reuters".
std::string_view source_key(Source source);
// Maps a publisher site ("www.reuters.com", "WSJ", ...) onto a source.
std::optional<Source> source_from_site(std::string_view site);

/// Valence lexicon plus the booster and negator word lists the scorer uses.
///
/// Tokens are stored lowercase. `load_lexicon` fills `entries` from a file and
/// installs the default booster and negator lists.
struct Lexicon {
  std::map<std::string, double, std::less<>> entries;
  std::map<std::string, double, std::less<>> boosters;
  std::set<std::string, std::less<>> negators;

  static Lexicon with_default_rules();
  std::optional<double> valence(std::string_view token) const;
};

Lexicon load_lexicon(const std::filesystem::path& path);

struct SentimentScore {
  double pos = 0.0;
  double neg = 0.0;
  double neu = 1.0;
  double compound = 0.0;
};

struct NewsItem {
  Date published;
  Source source;
  std::string title;
};

struct DailySourceScores {
  Date date;
  std::array<double, kNumSources> scores{};
  std::array<std::size_t, kNumSources> counts{};
};

inline constexpr double kCompoundAlpha = 15.0;
inline constexpr double kNegationScalar = -0.74;
inline constexpr std::size_t kNegationReach = 3;
inline constexpr double kNeutralFill = 0.0;

std::vector<std::string> tokenize(std::string_view text);

SentimentScore score_text(const Lexicon& lexicon, std::string_view text);

// x / sqrt(x^2 + alpha), clamped to [-1, 1].
double normalize_compound(double summed_valence, double alpha = kCompoundAlpha);

/// Mean compound score per (trading date, source). News dated on a
/// non-trading day counts toward the next calendar date; news after the last
/// calendar date is dropped. Cells with no articles get `kNeutralFill`.
std::vector<DailySourceScores> aggregate_daily(const std::vector<NewsItem>& items, const Lexicon& lexicon,
                                               const std::vector<Date>& calendar);

enum class Polarity { Positive, Negative };

/// Token counts over titles whose compound score has the requested sign,
/// stop-words removed, sorted by count descending then token ascending.
std::vector<std::pair<std::string, std::size_t>> word_frequency(const std::vector<NewsItem>& items,
                                                                const Lexicon& lexicon, Polarity polarity,
                                                                const std::set<std::string, std::less<>>& stop_words);

const std::set<std::string, std::less<>>& default_stop_words();
std::set<std::string, std::less<>> load_stop_words(const std::filesystem::path& path);

struct NewsCorpus {
  std::vector<NewsItem> items;
  std::array<std::size_t, kNumSources> per_source{};
  std::size_t skipped_unknown_site = 0;
  std::size_t skipped_empty_title = 0;
};

// Newline-delimited JSON with `title`, `published` and `site` fields.
NewsCorpus load_news(const std::filesystem::path& path);

// Trading calendar: first CSV column of each line that parses as a date.
std::vector<Date> load_calendar(const std::filesystem::path& path);

void write_daily_scores(const std::filesystem::path& path, const std::vector<DailySourceScores>& rows);
std::vector<DailySourceScores> read_daily_scores(const std::filesystem::path& path);

void write_word_frequency(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, std::size_t>>& ranked);

}  // namespace newsflow::sentiment
