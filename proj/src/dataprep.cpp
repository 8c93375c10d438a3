#include "newsflow/dataprep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "csv.hpp"

namespace newsflow::dataprep {

namespace {

double parse_number(const std::string& field, const std::string& source, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError(source, line, "expected a finite number, got '" + field + "'");
  }
  return value;
}

Window make_window(const JointSeries& joint, std::size_t start, std::size_t p) {
  std::vector<double> prices(p);
  for (std::size_t k = 0; k < p; ++k) prices[k] = joint.rows[start + k][0];
  const auto norm = normalize_window(prices);

  Window w;
  w.input.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(kInputWidth));
  for (std::size_t k = 0; k < p; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    w.input(r, 0) = norm.values[k];
    for (std::size_t c = 1; c < kInputWidth; ++c) w.input(r, static_cast<Eigen::Index>(c)) = joint.rows[start + k][c];
  }
  w.meta = norm.meta;
  w.target_price = joint.rows[start + p][0];
  w.target = norm.meta.normalize(w.target_price);
  w.first_date = joint.dates[start];
  w.target_date = joint.dates[start + p];
  return w;
}

}  // namespace

void PriceSeries::validate() const {
  if (dates.size() != prices.size()) throw Error(ticker + ": dates and prices differ in length");
  for (std::size_t k = 1; k < dates.size(); ++k) {
    if (!(dates[k - 1] < dates[k])) throw Error(ticker + ": dates are not strictly increasing");
  }
  for (double p : prices) {
    if (!(std::isfinite(p) && p > 0.0)) throw Error(ticker + ": prices must be positive and finite");
  }
}

PriceTable load_prices(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::size_t date_col = table.column("date");
  const std::size_t ticker_col = table.column("ticker");
  const std::size_t price_col = table.column("adj_close");

  std::map<std::string, std::map<Date, double>> by_ticker;
  std::set<Date> all_dates;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const std::size_t lineno = table.line_numbers[r];
    Date date;
    try {
      date = parse_date(f[date_col]);
    } catch (const Error& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    if (f[ticker_col].empty()) throw ParseError(path.string(), lineno, "empty ticker");
    const double price = parse_number(f[price_col], path.string(), lineno);
    if (price <= 0.0) throw ParseError(path.string(), lineno, "adj_close must be positive");
    if (!by_ticker[f[ticker_col]].emplace(date, price).second) {
      throw ParseError(path.string(), lineno, "duplicate row for " + f[ticker_col] + " on " + format_date(date));
    }
    all_dates.insert(date);
  }

  PriceTable out;
  out.calendar.assign(all_dates.begin(), all_dates.end());
  for (auto& [ticker, rows] : by_ticker) {
    if (rows.size() != all_dates.size()) {
      out.dropped.push_back(ticker);
      warn("dropping ticker " + ticker + ": " + std::to_string(all_dates.size() - rows.size()) +
           " missing trading date(s)");
      continue;
    }
    PriceSeries s;
    s.ticker = ticker;
    for (const auto& [date, price] : rows) {
      s.dates.push_back(date);
      s.prices.push_back(price);
    }
    out.series.push_back(std::move(s));
  }
  if (out.series.empty()) throw Error("no complete price series left in '" + path.string() + "'");
  return out;
}

void write_prices(const std::filesystem::path& path, const std::vector<PriceSeries>& series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "date,ticker,adj_close\n";
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.dates.size(); ++k) {
      out << format_date(s.dates[k]) << ',' << s.ticker << ',' << csv::format_double(s.prices[k]) << '\n';
    }
  }
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

JointSeries JointSeries::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows.size()) throw Error("joint series slice out of range");
  JointSeries out;
  out.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(begin), dates.begin() + static_cast<std::ptrdiff_t>(end));
  out.rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

void JointSeries::validate() const {
  if (dates.size() != rows.size()) throw Error("joint series: date and row counts differ");
  for (std::size_t k = 1; k < dates.size(); ++k) {
    if (!(dates[k - 1] < dates[k])) throw Error("joint series: dates are not strictly increasing");
  }
}

JointSeries join(const PriceSeries& prices, const std::vector<sentiment::DailySourceScores>& scores) {
  prices.validate();
  std::map<Date, const sentiment::DailySourceScores*> by_date;
  for (const auto& s : scores) by_date[s.date] = &s;
  JointSeries out;
  out.dates = prices.dates;
  out.rows.reserve(prices.dates.size());
  for (std::size_t k = 0; k < prices.dates.size(); ++k) {
    JointRow row{};
    row[0] = prices.prices[k];
    if (auto it = by_date.find(prices.dates[k]); it != by_date.end()) {
      for (std::size_t s = 0; s < sentiment::kNumSources; ++s) row[1 + s] = it->second->scores[s];
    } else {
      for (std::size_t s = 0; s < sentiment::kNumSources; ++s) row[1 + s] = sentiment::kNeutralFill;
    }
    out.rows.push_back(row);
  }
  return out;
}

JointSeries zero_sentiment(const JointSeries& joint) {
  JointSeries out = joint;
  for (auto& row : out.rows) std::fill(row.begin() + 1, row.end(), 0.0);
  return out;
}

void write_joint(const std::filesystem::path& path, const JointSeries& joint) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "date,price,s_wsj,s_cnbc,s_fortune,s_reuters\n";
  for (std::size_t k = 0; k < joint.size(); ++k) {
    out << format_date(joint.dates[k]);
    for (double v : joint.rows[k]) out << ',' << csv::format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

JointSeries read_joint(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::array<const char*, kInputWidth> names = {"price", "s_wsj", "s_cnbc", "s_fortune", "s_reuters"};
  std::array<std::size_t, kInputWidth> cols{};
  for (std::size_t c = 0; c < kInputWidth; ++c) cols[c] = table.column(names[c]);
  const std::size_t date_col = table.column("date");
  JointSeries out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    try {
      out.dates.push_back(parse_date(f[date_col]));
    } catch (const Error& e) {
      throw ParseError(path.string(), table.line_numbers[r], e.what());
    }
    JointRow row{};
    for (std::size_t c = 0; c < kInputWidth; ++c) row[c] = parse_number(f[cols[c]], path.string(), table.line_numbers[r]);
    out.rows.push_back(row);
  }
  out.validate();
  return out;
}

NormalizedWindow normalize_window(std::span<const double> prices) {
  if (prices.empty()) throw DegenerateWindow("cannot normalize an empty window");
  const auto [lo, hi] = std::minmax_element(prices.begin(), prices.end());
  if (!(*hi > *lo)) throw DegenerateWindow("window is constant (max == min)");
  NormalizedWindow out;
  out.meta = MinMax{*lo, *hi};
  out.values.reserve(prices.size());
  for (double x : prices) out.values.push_back(out.meta.normalize(x));
  return out;
}

double denormalize(double value, const MinMax& meta) {
  if (!(meta.max > meta.min)) throw DegenerateWindow("normalization meta requires max > min");
  return value * (meta.max - meta.min) + meta.min;
}

std::vector<Eigen::MatrixXd> WindowedDataset::inputs(const std::vector<Window>& windows) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.input);
  return out;
}

std::vector<double> WindowedDataset::targets(const std::vector<Window>& windows) {
  std::vector<double> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.target);
  return out;
}

std::size_t train_length(std::size_t n, double split) {
  if (!(split > 0.0 && split < 1.0)) throw Error("split fraction must lie strictly between 0 and 1");
  return static_cast<std::size_t>(std::floor(split * static_cast<double>(n)));
}

std::vector<Window> rolling_windows(const JointSeries& joint, std::size_t window_size) {
  joint.validate();
  if (window_size == 0) throw Error("window size must be positive");
  std::vector<Window> out;
  if (joint.size() <= window_size) return out;
  out.reserve(joint.size() - window_size);
  for (std::size_t start = 0; start + window_size < joint.size(); ++start) {
    out.push_back(make_window(joint, start, window_size));
  }
  return out;
}

WindowedDataset build_windows(const JointSeries& joint, std::size_t window_size, double split) {
  const std::size_t n = joint.size();
  const std::size_t n_train = train_length(n, split);
  if (n_train < window_size + 1 || n - n_train < window_size + 1) {
    throw SeriesTooShort("series of " + std::to_string(n) + " dates splits into " + std::to_string(n_train) + " + " +
                         std::to_string(n - n_train) + "; each span needs at least " +
                         std::to_string(window_size + 1) + " dates for window size " + std::to_string(window_size));
  }
  WindowedDataset ds;
  ds.window_size = window_size;
  ds.train = rolling_windows(joint.slice(0, n_train), window_size);
  ds.test = rolling_windows(joint.slice(n_train, n), window_size);
  return ds;
}

double estimate_source_variance(const JointSeries& joint, std::size_t source, std::size_t train_len) {
  if (source >= sentiment::kNumSources) throw Error("source index out of range");
  if (train_len < 2 || train_len > joint.size()) throw SeriesTooShort("variance needs at least two training dates");
  const std::size_t col = 1 + source;
  const double shift = joint.rows[0][col];
  double mean = 0.0;
  for (std::size_t k = 0; k < train_len; ++k) mean += joint.rows[k][col] - shift;
  mean /= static_cast<double>(train_len);
  double acc = 0.0;
  for (std::size_t k = 0; k < train_len; ++k) {
    const double d = joint.rows[k][col] - shift - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(train_len);
}

JointSeries add_noise(const JointSeries& train_span, std::size_t source, const NoiseConfig& config) {
  if (source >= sentiment::kNumSources) throw Error("source index out of range");
  if (!(config.lambda_n >= 0.0)) throw Error("noise weight lambda_n must be non-negative");
  const double variance = config.lambda_n * config.variances[source];
  if (!(variance >= 0.0) || !std::isfinite(variance)) throw Error("noise variance must be finite and non-negative");
  JointSeries out = train_span;
  if (variance == 0.0) return out;
  std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(source)));
  std::normal_distribution<double> noise(0.0, std::sqrt(variance));
  for (auto& row : out.rows) row[1 + source] += noise(rng);
  return out;
}

WindowedDataset build_augmented_trainset(const JointSeries& joint, std::size_t window_size, double split,
                                         NoiseConfig config) {
  WindowedDataset clean = build_windows(joint, window_size, split);
  const std::size_t n_train = train_length(joint.size(), split);
  for (std::size_t s = 0; s < sentiment::kNumSources; ++s) {
    config.variances[s] = estimate_source_variance(joint, s, n_train);
  }
  const JointSeries train_span = joint.slice(0, n_train);

  WindowedDataset ds;
  ds.window_size = window_size;
  ds.tag = "dp";
  ds.test = std::move(clean.test);
  for (std::size_t s = 0; s < sentiment::kNumSources; ++s) {
    auto copy = rolling_windows(add_noise(train_span, s, config), window_size);
    for (auto& w : copy) {
      w.noise_source = s;
      ds.train.push_back(std::move(w));
    }
  }
  ds.noise = config;
  return ds;
}

}  // namespace newsflow::dataprep
