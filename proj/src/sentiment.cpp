#include "newsflow/sentiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "csv.hpp"

namespace newsflow::sentiment {

namespace {

constexpr double kBoosterIncrement = 0.293;

bool is_word_byte(unsigned char ch) { return std::isalnum(ch) || ch >= 0x80 || ch == '\''; }

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

double parse_double(std::string_view field, const std::string& source, std::size_t line) {
  field = trim(field);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError(source, line, "expected a finite number, got '" + std::string(field) + "'");
  }
  return value;
}

// Booster effect dampens with distance from the scored word.
double booster_scale(std::size_t distance) {
  switch (distance) {
    case 1: return 1.0;
    case 2: return 0.95;
    default: return 0.9;
  }
}

}  // namespace

std::string_view source_name(Source source) {
  switch (source) {
    case Source::WSJ: return "WSJ";
    case Source::CNBC: return "CNBC";
    case Source::Fortune: return "Fortune";
    case Source::Reuters: return "Reuters";
  }
  return "?";
}

std::string_view source_key(Source source) {
  switch (source) {
    case Source::WSJ: return "wsj";
    case Source::CNBC: return "cnbc";
    case Source::Fortune: return "fortune";
    case Source::Reuters: return "reuters";
  }
  return "?";
}

std::optional<Source> source_from_site(std::string_view site) {
  const std::string s = lowercase(trim(site));
  if (s.empty()) return std::nullopt;
  for (Source src : kAllSources) {
    if (s.find(source_key(src)) != std::string::npos) return src;
  }
  return std::nullopt;
}

Lexicon Lexicon::with_default_rules() {
  Lexicon lex;
  for (const char* w : {"absolutely", "amazingly", "completely", "considerably", "deeply", "enormously",
                        "entirely", "especially", "exceptionally", "extremely", "greatly", "highly",
                        "hugely", "incredibly", "majorly", "more", "most", "particularly", "really",
                        "remarkably", "sharply", "significantly", "so", "strongly", "substantially",
                        "totally", "tremendously", "very"}) {
    lex.boosters.emplace(w, kBoosterIncrement);
  }
  for (const char* w : {"almost", "barely", "hardly", "less", "little", "marginally", "modestly",
                        "partly", "scarcely", "slightly", "somewhat"}) {
    lex.boosters.emplace(w, -kBoosterIncrement);
  }
  for (const char* w : {"ain't", "aren't", "can't", "cannot", "couldn't", "didn't", "doesn't", "don't",
                        "hadn't", "hasn't", "haven't", "isn't", "neither", "never", "no", "nobody",
                        "none", "nor", "not", "nothing", "nowhere", "shouldn't", "wasn't", "weren't",
                        "without", "won't", "wouldn't"}) {
    lex.negators.emplace(w);
  }
  return lex;
}

std::optional<double> Lexicon::valence(std::string_view token) const {
  if (auto it = entries.find(token); it != entries.end()) return it->second;
  return std::nullopt;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon '" + path.string() + "'");
  Lexicon lex = Lexicon::with_default_rules();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path.string(), lineno, "expected 'token<TAB>valence'");
    }
    const std::string token = lowercase(trim(std::string_view(line).substr(0, tab)));
    if (token.empty()) throw ParseError(path.string(), lineno, "empty token");
    auto rest = std::string_view(line).substr(tab + 1);
    rest = rest.substr(0, rest.find('\t'));
    lex.entries[token] = parse_double(rest, path.string(), lineno);
  }
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return lex;
}

std::vector<std::string> tokenize(std::string_view text) {
  // Normalize typographic apostrophes (U+2018, U+2019) to ASCII.
  std::string s;
  s.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(text[i + 2]) == 0x98 || static_cast<unsigned char>(text[i + 2]) == 0x99)) {
      s.push_back('\'');
      i += 2;
    } else {
      s.push_back(text[i]);
    }
  }

  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !is_word_byte(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && is_word_byte(static_cast<unsigned char>(s[j]))) ++j;
    std::string_view word = std::string_view(s).substr(i, j - i);
    while (!word.empty() && word.front() == '\'') word.remove_prefix(1);
    while (!word.empty() && word.back() == '\'') word.remove_suffix(1);
    if (!word.empty()) tokens.push_back(lowercase(word));
    i = j;
  }
  return tokens;
}

double normalize_compound(double summed_valence, double alpha) {
  const double c = summed_valence / std::hypot(summed_valence, std::sqrt(alpha));
  return std::clamp(c, -1.0, 1.0);
}

SentimentScore score_text(const Lexicon& lexicon, std::string_view text) {
  const auto tokens = tokenize(text);
  double sum = 0.0;
  double pos_mass = 0.0;
  double neg_mass = 0.0;
  double neu_mass = 0.0;

  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto base = lexicon.valence(tokens[k]);
    if (!base || lexicon.boosters.contains(tokens[k])) {
      neu_mass += 1.0;
      continue;
    }
    double v = *base;
    bool negated = false;
    for (std::size_t d = 1; d <= kNegationReach && d <= k; ++d) {
      const std::string& prev = tokens[k - d];
      if (auto b = lexicon.boosters.find(prev); b != lexicon.boosters.end() && v != 0.0) {
        const double inc = b->second * booster_scale(d);
        v += (v > 0.0) ? inc : -inc;
      }
      if (lexicon.negators.contains(prev)) negated = true;
    }
    if (negated) v *= kNegationScalar;
    sum += v;
    if (v > 0.0) {
      pos_mass += std::abs(v) + 1.0;
    } else if (v < 0.0) {
      neg_mass += std::abs(v) + 1.0;
    } else {
      neu_mass += 1.0;
    }
  }

  const double total = pos_mass + neg_mass + neu_mass;
  if (pos_mass == 0.0 && neg_mass == 0.0) return SentimentScore{};
  return SentimentScore{pos_mass / total, neg_mass / total, neu_mass / total, normalize_compound(sum)};
}

std::vector<DailySourceScores> aggregate_daily(const std::vector<NewsItem>& items, const Lexicon& lexicon,
                                               const std::vector<Date>& calendar) {
  if (!std::is_sorted(calendar.begin(), calendar.end()) ||
      std::adjacent_find(calendar.begin(), calendar.end()) != calendar.end()) {
    throw Error("trading calendar must be sorted with unique dates");
  }
  // Per cell compounds, summed in sorted order so the mean does not depend
  // on corpus order.
  std::vector<std::array<std::vector<double>, kNumSources>> cells(calendar.size());
  for (const auto& item : items) {
    auto it = std::lower_bound(calendar.begin(), calendar.end(), item.published);
    if (it == calendar.end()) continue;
    const auto day = static_cast<std::size_t>(it - calendar.begin());
    cells[day][static_cast<std::size_t>(item.source)].push_back(score_text(lexicon, item.title).compound);
  }

  std::vector<DailySourceScores> out;
  out.reserve(calendar.size());
  for (std::size_t d = 0; d < calendar.size(); ++d) {
    DailySourceScores row{calendar[d], {}, {}};
    for (std::size_t s = 0; s < kNumSources; ++s) {
      auto& values = cells[d][s];
      row.counts[s] = values.size();
      if (values.empty()) {
        row.scores[s] = kNeutralFill;
        continue;
      }
      std::sort(values.begin(), values.end());
      double acc = 0.0;
      for (double v : values) acc += v;
      row.scores[s] = acc / static_cast<double>(values.size());
    }
    out.push_back(row);
  }
  return out;
}

const std::set<std::string, std::less<>>& default_stop_words() {
  static const std::set<std::string, std::less<>> words = {
      "a",    "about", "after", "all",   "an",   "and",   "are",  "as",    "at",   "be",   "by",
      "for",  "from",  "has",   "have",  "he",   "her",   "his",  "how",   "i",    "in",   "into",
      "is",   "it",    "its",   "new",   "of",   "on",    "or",   "our",   "over", "says", "she",
      "that", "the",   "their", "this",  "to",   "up",    "was",  "we",    "what", "when", "which",
      "who",  "why",   "will",  "with",  "you",  "your",  "s",    "us",    "more", "than", "out",
      "can",  "may",   "been",  "were",  "they", "them",  "but",  "would", "could"};
  return words;
}

std::set<std::string, std::less<>> load_stop_words(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stop-word list '" + path.string() + "'");
  std::set<std::string, std::less<>> words;
  std::string line;
  while (std::getline(in, line)) {
    auto w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    words.insert(lowercase(w));
  }
  return words;
}

std::vector<std::pair<std::string, std::size_t>> word_frequency(const std::vector<NewsItem>& items,
                                                                const Lexicon& lexicon, Polarity polarity,
                                                                const std::set<std::string, std::less<>>& stop_words) {
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& item : items) {
    const double c = score_text(lexicon, item.title).compound;
    const bool selected = polarity == Polarity::Positive ? c > 0.0 : c < 0.0;
    if (!selected) continue;
    for (auto& tok : tokenize(item.title)) {
      if (!stop_words.contains(tok)) ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

NewsCorpus load_news(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open news corpus '" + path.string() + "'");
  NewsCorpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string(), lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError(path.string(), lineno, "record is not a JSON object");
    for (const char* field : {"title", "published", "site"}) {
      if (!rec.contains(field) || !rec[field].is_string()) {
        throw ParseError(path.string(), lineno, std::string("missing string field '") + field + "'");
      }
    }
    const auto source = source_from_site(rec["site"].get<std::string>());
    if (!source) {
      ++corpus.skipped_unknown_site;
      continue;
    }
    std::string title(trim(rec["title"].get<std::string>()));
    if (title.empty()) {
      ++corpus.skipped_empty_title;
      continue;
    }
    Date published;
    try {
      published = parse_date(rec["published"].get<std::string>());
    } catch (const Error& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    ++corpus.per_source[static_cast<std::size_t>(*source)];
    corpus.items.push_back(NewsItem{published, *source, std::move(title)});
  }
  return corpus;
}

std::vector<Date> load_calendar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calendar '" + path.string() + "'");
  std::vector<Date> dates;
  std::string line;
  while (std::getline(in, line)) {
    auto first = std::string_view(line).substr(0, line.find(','));
    if (looks_like_date(first)) dates.push_back(parse_date(first));
  }
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
  return dates;
}

void write_daily_scores(const std::filesystem::path& path, const std::vector<DailySourceScores>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "date";
  for (Source s : kAllSources) out << ",s_" << source_key(s);
  for (Source s : kAllSources) out << ",n_" << source_key(s);
  out << '\n';
  for (const auto& row : rows) {
    out << format_date(row.date);
    for (double v : row.scores) out << ',' << csv::format_double(v);
    for (auto n : row.counts) out << ',' << n;
    out << '\n';
  }
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

std::vector<DailySourceScores> read_daily_scores(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  std::array<std::size_t, kNumSources> score_col{};
  std::array<std::optional<std::size_t>, kNumSources> count_col{};
  const std::size_t date_col = table.column("date");
  for (Source s : kAllSources) {
    const auto idx = static_cast<std::size_t>(s);
    score_col[idx] = table.column("s_" + std::string(source_key(s)));
    count_col[idx] = table.find_column("n_" + std::string(source_key(s)));
  }
  std::vector<DailySourceScores> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    const std::size_t lineno = table.line_numbers[r];
    DailySourceScores row{};
    try {
      row.date = parse_date(fields[date_col]);
    } catch (const Error& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    for (std::size_t s = 0; s < kNumSources; ++s) {
      row.scores[s] = parse_double(fields[score_col[s]], path.string(), lineno);
      if (count_col[s]) row.counts[s] = static_cast<std::size_t>(parse_double(fields[*count_col[s]], path.string(), lineno));
    }
    rows.push_back(row);
  }
  return rows;
}

void write_word_frequency(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, std::size_t>>& ranked) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "token,count\n";
  for (const auto& [token, count] : ranked) out << csv::quote(token) << ',' << count << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace newsflow::sentiment
