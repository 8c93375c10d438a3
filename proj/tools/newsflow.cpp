// newsflow: score news, generate fixtures, train and evaluate forecasters.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "newsflow/pipeline.hpp"

namespace nf = newsflow;
namespace pl = newsflow::pipeline;

namespace {

constexpr const char* kConfigHelp =
    "Flat key=value file. Keys are long flag names without dashes "
    "(window=10, epochs=200, method=lstm-news,dp-lstm). '#' starts a comment. "
    "Flags given on the command line win over the file.";

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw nf::IoError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = nf::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw nf::ParseError(path, lineno, "expected key=value");
    std::string key(nf::trim(body.substr(0, eq)));
    std::string value(nf::trim(body.substr(eq + 1)));
    if (key.empty()) throw nf::ParseError(path, lineno, "empty key");
    out[key] = value;
  }
  return out;
}

// Fills options not given on the command line from the config file, then the
// seed from NEWSFLOW_SEED.
void apply_fallbacks(CLI::App& sub, const std::string& config_path) {
  std::map<std::string, std::string> values;
  if (!config_path.empty()) values = read_config_file(config_path);
  for (const auto& [key, value] : values) {
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw nf::Error("config file '" + config_path + "': unknown key '" + key + "' for '" + sub.get_name() + "'");
    }
    if (key == "config") throw nf::Error("config file cannot name another config file");
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw nf::Error("config file '" + config_path + "': key '" + key + "': " + e.what());
    }
  }
  if (auto* seed = sub.get_option_no_throw("--seed"); seed && seed->count() == 0) {
    if (const char* env = std::getenv("NEWSFLOW_SEED"); env && *env) {
      try {
        seed->add_result(env);
        seed->run_callback();
      } catch (const CLI::Error& e) {
        throw nf::Error(std::string("NEWSFLOW_SEED: ") + e.what());
      }
    }
  }
}

std::vector<pl::Method> parse_methods(const std::string& list) {
  std::vector<pl::Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto name = nf::trim(item);
    if (!name.empty()) out.push_back(pl::parse_method(name));
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw nf::IoError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"News-sentiment stock forecasting toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // score
  pl::ScoreOptions score;
  std::string score_config, score_wordfreq, score_stop;
  auto* score_cmd = app.add_subcommand("score", "Score a news corpus into daily per-source sentiment");
  score_cmd->add_option("--news", score.news, "News corpus, one JSON object per line")->required();
  score_cmd->add_option("--lexicon", score.lexicon, "Lexicon file, token<TAB>valence per line")->required();
  score_cmd->add_option("--prices", score.calendar, "Trading calendar: any CSV whose first column is a date")
      ->required();
  score_cmd->add_option("--out", score.out, "Daily scores CSV")->default_val("scores.csv");
  score_cmd->add_option("--wordfreq", score_wordfreq, "Directory for positive/negative word counts");
  score_cmd->add_option("--stop-words", score_stop, "Stop-word list, one token per line");
  score_cmd->add_option("--config", score_config, kConfigHelp);

  // fixture
  nf::dataprep::FixtureSpec spec;
  std::string fixture_out = "fixture", fixture_config;
  auto* fixture_cmd = app.add_subcommand("fixture", "Generate a synthetic price and sentiment corpus");
  fixture_cmd->add_option("--seed", spec.seed, "Random seed (falls back to NEWSFLOW_SEED)");
  fixture_cmd->add_option("--tickers", spec.tickers, "Number of synthetic tickers");
  fixture_cmd->add_option("--days", spec.days, "Number of trading dates");
  fixture_cmd->add_option("--window", spec.window, "Window size recorded in the sidecar");
  fixture_cmd->add_option("--split", spec.split, "Training fraction used to place spikes");
  fixture_cmd->add_option("--phi", spec.phi, "AR(1) coefficient of the price deviation");
  fixture_cmd->add_option("--kappa", spec.kappa, "Price response to the previous day's mean sentiment");
  fixture_cmd->add_option("--sigma", spec.sigma, "Price innovation standard deviation");
  fixture_cmd->add_option("--spike-rate", spec.spike_rate, "Probability of a spike on an eligible date");
  fixture_cmd->add_option("--spike-source", spec.spike_source, "Corrupted source index (0 wsj, 1 cnbc, 2 fortune, 3 reuters)");
  fixture_cmd->add_option("--spike-span", spec.spike_span, "Last training dates eligible for spikes");
  fixture_cmd->add_option("--spike-magnitude", spec.spike_magnitude, "Absolute spike value");
  fixture_cmd->add_option("--start", spec.start_date, "First calendar date");
  fixture_cmd->add_option("--out", fixture_out, "Output directory");
  fixture_cmd->add_option("--config", fixture_config, kConfigHelp);

  // run
  pl::RunConfig run;
  std::string run_methods = "dp-lstm", run_config;
  std::size_t arma_p = 0;
  bool no_svg = false, no_checkpoints = false;
  auto* run_cmd = app.add_subcommand("run", "Train, predict and evaluate forecasting methods");
  run_cmd->add_option("--prices", run.prices, "Prices CSV with date,ticker,adj_close")->required();
  run_cmd->add_option("--news", run.news, "Daily scores CSV written by 'score' or 'fixture'")->required();
  run_cmd->add_option("--method", run_methods, "Comma list of arma, lstm-no-news, lstm-news, dp-lstm");
  run_cmd->add_option("--window", run.window, "Rolling window size p");
  run_cmd->add_option("--split", run.split, "Training fraction of the dates");
  run_cmd->add_option("--lambda-noise", run.lambda_noise, "Noise scale relative to each source's training variance");
  run_cmd->add_option("--epochs", run.epochs, "Training epochs");
  run_cmd->add_option("--lr", run.learning_rate, "ADAM learning rate");
  run_cmd->add_option("--hidden", run.hidden, "Units per LSTM layer");
  run_cmd->add_option("--dropout", run.dropout, "Dropout rate");
  run_cmd->add_option("--batch", run.batch_size, "Mini-batch size, 0 for full batch");
  run_cmd->add_option("--patience", run.early_stop_patience, "Early-stop patience in epochs, 0 disables");
  run_cmd->add_option("--arma-p", arma_p, "ARMA autoregressive order, 0 uses the window size");
  run_cmd->add_option("--arma-q", run.arma_q, "ARMA moving-average order");
  run_cmd->add_option("--seed", run.seed, "Random seed (falls back to NEWSFLOW_SEED)");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--workers", run.workers, "Parallel per-ticker workers");
  run_cmd->add_flag("--no-svg", no_svg, "Skip SVG charts");
  run_cmd->add_flag("--no-checkpoints", no_checkpoints, "Skip model checkpoints");
  run_cmd->add_option("--config", run_config, kConfigHelp);

  // compare
  std::vector<std::string> compare_reports;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "Tabulate report JSON files and flag the best method per metric");
  compare_cmd->add_option("reports", compare_reports, "Report JSON files")->required()->expected(2, -1);
  compare_cmd->add_option("--out", compare_out, "Also write the table as CSV to this path");

  // plot
  std::string plot_predictions, plot_news, plot_out = "plot";
  auto* plot_cmd = app.add_subcommand("plot", "Render SVG charts from a predictions CSV");
  plot_cmd->add_option("--predictions", plot_predictions, "predictions.csv written by 'run'")->required();
  plot_cmd->add_option("--news", plot_news, "Daily scores CSV for the sentiment chart");
  plot_cmd->add_option("--out", plot_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::string stage = "setup";
  try {
    if (score_cmd->parsed()) {
      apply_fallbacks(*score_cmd, score_config);
      if (!score_wordfreq.empty()) score.wordfreq_dir = score_wordfreq;
      if (!score_stop.empty()) score.stop_words = score_stop;
      stage = "score";
      const auto summary = pl::cmd_score(score);
      std::size_t total = 0;
      for (std::size_t s = 0; s < nf::sentiment::kNumSources; ++s) {
        std::cout << nf::sentiment::source_name(nf::sentiment::kAllSources[s]) << ": " << summary.per_source[s]
                  << " articles\n";
        total += summary.per_source[s];
      }
      std::cout << "total: " << total << " articles over " << summary.calendar_days << " trading days\n";
      std::cout << "skipped: " << summary.skipped_unknown_site << " unknown site, " << summary.skipped_empty_title
                << " empty title\n";
      std::cout << "wrote " << score.out.string() << '\n';
    } else if (fixture_cmd->parsed()) {
      apply_fallbacks(*fixture_cmd, fixture_config);
      stage = "fixture";
      const auto fx = pl::cmd_fixture(spec, fixture_out);
      std::cout << "wrote " << fx.prices.size() << " tickers x " << fx.spec.days << " dates to " << fixture_out
                << " (seed " << fx.spec.seed << ", " << fx.spike_dates.size() << " spikes)\n";
    } else if (run_cmd->parsed()) {
      apply_fallbacks(*run_cmd, run_config);
      run.methods = parse_methods(run_methods);
      if (arma_p > 0) run.arma_p = arma_p;
      run.svg = !no_svg;
      run.checkpoints = !no_checkpoints;
      stage = "run";
      const auto outcome = pl::cmd_run(run);
      std::cout << "seed " << run.seed << '\n';
      for (const auto& mo : outcome.methods) {
        std::cout << mo.report.method << ": mean_mpa " << mo.report.mean_mpa << ", mse " << mo.report.mse
                  << ", accuracy " << mo.report.accuracy << '\n';
      }
      if (outcome.comparison) std::cout << '\n' << outcome.comparison->to_text();
      std::cout << "wrote " << run.out.string() << '\n';
    } else if (compare_cmd->parsed()) {
      stage = "compare";
      std::vector<nf::eval::EvalReport> reports;
      for (const auto& path : compare_reports) reports.push_back(nf::eval::read_report_json(path));
      const auto table = nf::eval::compare(reports);
      std::cout << table.to_text();
      if (!compare_out.empty()) write_file(compare_out, table.to_csv());
    } else if (plot_cmd->parsed()) {
      stage = "plot";
      const auto tracks = nf::eval::read_prediction_tracks(plot_predictions);
      std::vector<nf::sentiment::DailySourceScores> daily;
      if (!plot_news.empty()) daily = nf::sentiment::read_daily_scores(plot_news);
      nf::eval::emit_plot_data(plot_out, tracks, daily, true);
      std::cout << "wrote " << plot_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "newsflow " << stage << ": error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
