#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "newsflow/baseline.hpp"
#include "newsflow/dataprep.hpp"
#include "newsflow/eval.hpp"
#include "newsflow/neural.hpp"
#include "newsflow/sentiment.hpp"

namespace newsflow::pipeline {

enum class Method { Arma, LstmNoNews, LstmNews, DpLstm };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

struct RunConfig {
  std::size_t window = 10;
  double split = 0.85;
  double lambda_noise = 0.1;
  int epochs = 200;
  double learning_rate = 1e-3;
  std::size_t hidden = 32;
  double dropout = 0.2;
  std::size_t batch_size = 0;  // 0 = full batch
  int early_stop_patience = 0;
  std::uint64_t seed = 42;
  std::size_t arma_q = 0;
  std::optional<std::size_t> arma_p;  // defaults to the window size
  std::filesystem::path prices;
  std::filesystem::path news;  // daily source scores CSV
  std::filesystem::path out = "out";
  std::size_t workers = 1;
  std::vector<Method> methods = {Method::DpLstm};
  bool svg = true;
  bool checkpoints = true;

  void validate() const;
  // Effective configuration, echoed into every report.
  std::string to_json() const;
};

struct TickerResult {
  std::string ticker;
  std::vector<eval::TrackPoint> points;
  std::optional<neural::TrainedModel> model;
  std::optional<baseline::SentimentArmaParams> arma;
  double train_mse = 0.0;        // eval-mode, normalized units (LSTM) or price units (ARMA)
  double target_variance = 0.0;  // of the training targets, same units
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
};

/// Builds the method's dataset from one ticker's joint series, fits, predicts
/// the test windows and de-normalizes. All randomness derives from
/// `config.seed` and the ticker name.
TickerResult run_ticker(const RunConfig& config, Method method, const std::string& ticker,
                        const dataprep::JointSeries& joint);

struct MethodOutcome {
  Method method;
  eval::PredictionTrack track;
  eval::EvalReport report;
  std::vector<TickerResult> tickers;
};

struct RunOutcome {
  std::vector<MethodOutcome> methods;
  std::optional<eval::ComparisonTable> comparison;
};

// In-memory pipeline over already-loaded series (parallel per ticker).
RunOutcome run_methods(const RunConfig& config, const std::vector<dataprep::PriceSeries>& prices,
                       const std::vector<sentiment::DailySourceScores>& scores);

/// Loads inputs, runs every configured method and writes reports,
/// checkpoints, joint-series caches and plot data under `config.out`.
RunOutcome cmd_run(const RunConfig& config);

struct ScoreSummary {
  std::array<std::size_t, sentiment::kNumSources> per_source{};
  std::size_t skipped_unknown_site = 0;
  std::size_t skipped_empty_title = 0;
  std::size_t calendar_days = 0;
};

struct ScoreOptions {
  std::filesystem::path news;
  std::filesystem::path lexicon;
  std::filesystem::path calendar;
  std::filesystem::path out;
  std::optional<std::filesystem::path> wordfreq_dir;
  std::optional<std::filesystem::path> stop_words;
};

ScoreSummary cmd_score(const ScoreOptions& options);

dataprep::Fixture cmd_fixture(const dataprep::FixtureSpec& spec, const std::filesystem::path& out_dir);

}  // namespace newsflow::pipeline
