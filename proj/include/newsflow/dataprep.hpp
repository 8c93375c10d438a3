#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "newsflow/common.hpp"
#include "newsflow/sentiment.hpp"

namespace newsflow::dataprep {

// Price plus one compound score per news source.
inline constexpr std::size_t kInputWidth = 1 + sentiment::kNumSources;

struct PriceSeries {
  std::string ticker;
  std::vector<Date> dates;
  std::vector<double> prices;

  void validate() const;
};

struct PriceTable {
  std::vector<PriceSeries> series;
  std::vector<std::string> dropped;  // tickers with gaps in the common calendar
  std::vector<Date> calendar;
};

/// Reads `date,ticker,adj_close`. Tickers missing any date of the union
/// calendar are dropped (and named in a warning).
PriceTable load_prices(const std::filesystem::path& path);
void write_prices(const std::filesystem::path& path, const std::vector<PriceSeries>& series);

using JointRow = std::array<double, kInputWidth>;

struct JointSeries {
  std::vector<Date> dates;
  std::vector<JointRow> rows;  // (price, s_wsj, s_cnbc, s_fortune, s_reuters)

  std::size_t size() const { return rows.size(); }
  JointSeries slice(std::size_t begin, std::size_t end) const;
  void validate() const;
};

/// Aligns daily source scores onto the price dates. Dates without a score
/// row get the neutral fill for every source.
JointSeries join(const PriceSeries& prices, const std::vector<sentiment::DailySourceScores>& scores);
JointSeries zero_sentiment(const JointSeries& joint);

void write_joint(const std::filesystem::path& path, const JointSeries& joint);
JointSeries read_joint(const std::filesystem::path& path);

struct MinMax {
  double min = 0.0;
  double max = 1.0;

  double normalize(double value) const { return (value - min) / (max - min); }
};

class DegenerateWindow : public Error {
 public:
  using Error::Error;
};

class SeriesTooShort : public Error {
 public:
  using Error::Error;
};

struct NormalizedWindow {
  std::vector<double> values;
  MinMax meta;
};

// Min-max scaling with min/max taken over `prices`.
NormalizedWindow normalize_window(std::span<const double> prices);
double denormalize(double value, const MinMax& meta);

struct Window {
  Eigen::MatrixXd input;  // steps x kInputWidth, price channel normalized
  double target = 0.0;    // next price, normalized with `meta`
  double target_price = 0.0;
  MinMax meta;
  Date first_date;
  Date target_date;
  std::optional<std::size_t> noise_source;  // set on noise-augmented copies
};

struct NoiseConfig {
  double lambda_n = 0.1;
  std::uint64_t seed = 0;
  std::array<double, sentiment::kNumSources> variances{};
};

struct WindowedDataset {
  std::vector<Window> train;
  std::vector<Window> test;
  std::size_t window_size = 0;
  std::string tag = "clean";
  std::optional<NoiseConfig> noise;

  static std::vector<Eigen::MatrixXd> inputs(const std::vector<Window>& windows);
  static std::vector<double> targets(const std::vector<Window>& windows);
};

// Number of leading dates that form the training span: floor(split * n).
std::size_t train_length(std::size_t n, double split);

/// Stride-1 windows over the whole series: n - p of them.
std::vector<Window> rolling_windows(const JointSeries& joint, std::size_t window_size);

/// Splits the dates chronologically at train_length(n, split), then windows
/// each span on its own so no window straddles the boundary.
WindowedDataset build_windows(const JointSeries& joint, std::size_t window_size, double split);

/// Population variance of one source over the first `train_len` rows.
double estimate_source_variance(const JointSeries& joint, std::size_t source, std::size_t train_len);

/// Copy of `train_span` with source `source` perturbed by i.i.d.
/// N(0, lambda_n * variances[source]) per row. Not clamped.
JointSeries add_noise(const JointSeries& train_span, std::size_t source, const NoiseConfig& config);

/// Four training copies, each with exactly one source noised, windowed and
/// concatenated. Variances are estimated from the training span and stored
/// in the returned dataset's noise config. Test windows come from clean data.
WindowedDataset build_augmented_trainset(const JointSeries& joint, std::size_t window_size, double split,
                                         NoiseConfig config);

// Synthetic corpus: AR(1) prices around a per-ticker level whose drift
// follows the previous day's mean news sentiment, four noisy views of a
// latent market sentiment, and optional adversarial spikes in one source.
struct FixtureSpec {
  std::uint64_t seed = 42;
  std::size_t tickers = 3;
  std::size_t days = 121;
  std::size_t window = 10;
  double split = 0.85;
  double phi = 0.9;
  double kappa = 4.0;     // price units per unit of mean sentiment
  double sigma = 0.3;     // price innovation std
  double sentiment_persistence = 0.5;
  double sentiment_std = 0.25;
  double source_std = 0.05;
  double spike_rate = 0.0;
  std::size_t spike_source = 3;  // Reuters
  std::size_t spike_span = 30;   // last training dates eligible for spikes
  double spike_magnitude = 1.0;
  std::string start_date = "2017-12-07";
};

struct Fixture {
  FixtureSpec spec;
  std::vector<PriceSeries> prices;
  std::vector<sentiment::DailySourceScores> scores;
  std::vector<double> levels;  // per-ticker mean level
  std::vector<Date> spike_dates;
};

Fixture generate_fixture(const FixtureSpec& spec);
// prices.csv, scores.csv and truth.json inside `dir`.
void write_fixture(const std::filesystem::path& dir, const Fixture& fixture);

}  // namespace newsflow::dataprep
