#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "newsflow/common.hpp"
#include "newsflow/sentiment.hpp"

namespace newsflow::eval {

struct TrackPoint {
  std::string ticker;
  Date date;
  double real = 0.0;       // de-normalized price
  double predicted = 0.0;  // de-normalized price
};

struct PredictionTrack {
  std::string method;  // lstm-no-news | lstm-news | dp-lstm | arma
  std::vector<TrackPoint> points;

  // Real prices positive, (ticker, date) pairs unique.
  void validate() const;
};

struct EvalReport {
  std::string method;
  std::vector<Date> days;
  std::vector<double> per_day_mpa;
  double mean_mpa = 0.0;
  double mse = 0.0;
  double accuracy = 0.0;
  double mean_error_percent = 0.0;
};

// 1 - mean over stocks of |X - X_hat| / X on one date.
double mpa(const PredictionTrack& track, const Date& date);
double mean_mpa(const PredictionTrack& track);

/// Full report over all points of a track. Points with a non-finite
/// prediction are excluded with a warning.
EvalReport evaluate(const PredictionTrack& track);

// Same as evaluate, for a track holding exactly one series.
EvalReport index_metrics(const PredictionTrack& track);

enum class Better { Higher, Lower };

struct MetricColumn {
  std::string name;
  Better better;
  std::vector<double> values;      // one per report, in input order
  std::vector<bool> best;          // ties all flagged
};

struct ComparisonTable {
  std::vector<std::string> methods;
  std::vector<MetricColumn> metrics;  // mean_mpa, mse, accuracy, mean_error_percent

  std::string to_text() const;
  std::string to_csv() const;
};

ComparisonTable compare(const std::vector<EvalReport>& reports);

// Report JSON: method, mean_mpa, per_day_mpa, mse, accuracy,
// mean_error_percent, plus any extra fields merged in by the caller.
std::string report_json(const EvalReport& report, const std::string& extra_json = "{}");
EvalReport read_report_json(const std::filesystem::path& path);

/// Writes predictions.csv (date, ticker, real, one column per method) and,
/// when `daily` is non-empty, sentiment.csv (date, mean compound). With
/// `svg` set, line charts are rendered next to the CSVs.
void emit_plot_data(const std::filesystem::path& dir, const std::vector<PredictionTrack>& tracks,
                    const std::vector<sentiment::DailySourceScores>& daily, bool svg);

// Inverse of the predictions.csv written by emit_plot_data. Empty cells are
// points the method did not predict.
std::vector<PredictionTrack> read_prediction_tracks(const std::filesystem::path& path);

struct ChartSeries {
  std::string label;
  std::vector<double> values;
};

// Self-contained SVG line chart; a horizontal gridline is drawn at zero
// whenever zero lies inside the y-range.
std::string render_line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                              const std::vector<ChartSeries>& series);

}  // namespace newsflow::eval
