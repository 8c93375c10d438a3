#include "newsflow/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

namespace newsflow::pipeline {

namespace {

template <typename F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const std::exception& e) {
    throw Error("stage '" + name + "' failed: " + e.what());
  }
}

double population_variance(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(values.size());
}

std::vector<double> mean_sentiment(const dataprep::JointSeries& joint) {
  std::vector<double> out;
  out.reserve(joint.size());
  for (const auto& row : joint.rows) {
    double acc = 0.0;
    for (std::size_t s = 1; s < dataprep::kInputWidth; ++s) acc += row[s];
    out.push_back(acc / static_cast<double>(sentiment::kNumSources));
  }
  return out;
}

TickerResult run_arma(const RunConfig& config, const std::string& ticker, const dataprep::JointSeries& joint) {
  std::vector<double> prices;
  for (const auto& row : joint.rows) prices.push_back(row[0]);
  const auto sent = mean_sentiment(joint);
  const std::size_t n = prices.size();
  const std::size_t n_train = dataprep::train_length(n, config.split);
  const std::size_t p = config.arma_p.value_or(config.window);
  if (n_train < config.window + 1 || n - n_train < config.window + 1) {
    throw dataprep::SeriesTooShort("series of " + std::to_string(n) + " dates is too short for window " +
                                   std::to_string(config.window));
  }

  TickerResult result;
  result.ticker = ticker;
  const auto params = stage("fit arma", [&] {
    return baseline::sentiment_arma_fit(std::span(prices).first(n_train), std::span(sent).first(n_train), p,
                                        config.arma_q);
  });

  const auto eps = baseline::arma_residuals(params.price_arma, prices);
  auto predict_at = [&](std::size_t j) {
    baseline::ResidualState state(config.arma_q);
    for (std::size_t k = j >= config.arma_q ? j - config.arma_q : 0; k < j; ++k) state.push(eps[k]);
    return baseline::sentiment_arma_predict(params, std::span(prices).first(j), std::span(sent).first(j), state);
  };

  std::vector<double> train_targets;
  double sq = 0.0;
  for (std::size_t j = p; j < n_train; ++j) {
    const double d = prices[j] - predict_at(j);
    sq += d * d;
    train_targets.push_back(prices[j]);
  }
  result.train_windows = train_targets.size();
  result.train_mse = train_targets.empty() ? 0.0 : sq / static_cast<double>(train_targets.size());
  result.target_variance = population_variance(train_targets);

  for (std::size_t j = n_train + config.window; j < n; ++j) {
    result.points.push_back(eval::TrackPoint{ticker, joint.dates[j], prices[j], predict_at(j)});
  }
  result.test_windows = result.points.size();
  result.arma = params;
  return result;
}

TickerResult run_lstm(const RunConfig& config, Method method, const std::string& ticker,
                      const dataprep::JointSeries& joint) {
  const std::uint64_t ticker_seed = mix_seed(config.seed, ticker);
  const auto dataset = stage("prepare dataset", [&] {
    switch (method) {
      case Method::DpLstm: {
        dataprep::NoiseConfig noise;
        noise.lambda_n = config.lambda_noise;
        noise.seed = mix_seed(ticker_seed, "noise");
        return dataprep::build_augmented_trainset(joint, config.window, config.split, noise);
      }
      case Method::LstmNoNews:
        return dataprep::build_windows(dataprep::zero_sentiment(joint), config.window, config.split);
      default:
        return dataprep::build_windows(joint, config.window, config.split);
    }
  });

  const auto net = neural::NetworkConfig::default_stack(config.hidden, config.dropout, dataprep::kInputWidth);
  neural::TrainHyper hyper;
  hyper.epochs = config.epochs;
  hyper.learning_rate = config.learning_rate;
  hyper.seed = ticker_seed;
  hyper.batch_size = config.batch_size;
  hyper.early_stop_patience = config.early_stop_patience;

  const auto train_x = dataprep::WindowedDataset::inputs(dataset.train);
  const auto train_y = dataprep::WindowedDataset::targets(dataset.train);
  auto model = stage("train", [&] { return neural::train(net, train_x, train_y, hyper); });

  TickerResult result;
  result.ticker = ticker;
  result.train_windows = dataset.train.size();
  result.test_windows = dataset.test.size();
  stage("predict", [&] {
    const auto fitted = neural::predict(net, model.params, train_x);
    result.train_mse = neural::mse_loss(fitted, train_y);
    result.target_variance = population_variance(train_y);
    const auto test_x = dataprep::WindowedDataset::inputs(dataset.test);
    const auto pred = neural::predict(net, model.params, test_x);
    for (std::size_t k = 0; k < dataset.test.size(); ++k) {
      const auto& w = dataset.test[k];
      result.points.push_back(eval::TrackPoint{ticker, w.target_date, w.target_price, dataprep::denormalize(pred[k], w.meta)});
    }
  });
  result.model = std::move(model);
  return result;
}

nlohmann::ordered_json ticker_summary(const TickerResult& r) {
  nlohmann::ordered_json j;
  j["ticker"] = r.ticker;
  j["train_windows"] = r.train_windows;
  j["test_windows"] = r.test_windows;
  j["train_mse"] = r.train_mse;
  j["target_variance"] = r.target_variance;
  if (r.model && !r.model->report.epoch_loss.empty()) j["final_epoch_loss"] = r.model->report.epoch_loss.back();
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::Arma: return "arma";
    case Method::LstmNoNews: return "lstm-no-news";
    case Method::LstmNews: return "lstm-news";
    case Method::DpLstm: return "dp-lstm";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Arma, Method::LstmNoNews, Method::LstmNews, Method::DpLstm}) {
    if (method_name(m) == name) return m;
  }
  throw Error("unknown method '" + std::string(name) + "' (expected arma, lstm-no-news, lstm-news or dp-lstm)");
}

void RunConfig::validate() const {
  if (window < 1) throw Error("window size must be at least 1");
  if (!(split > 0.0 && split < 1.0)) throw Error("split must lie strictly between 0 and 1");
  if (!(lambda_noise >= 0.0)) throw Error("lambda-noise must be non-negative");
  if (epochs < 0) throw Error("epochs must be non-negative");
  if (!(learning_rate >= 0.0)) throw Error("learning rate must be non-negative");
  if (hidden < 1) throw Error("hidden size must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("dropout must lie in [0, 1)");
  if (workers < 1) throw Error("workers must be at least 1");
  if (methods.empty()) throw Error("no method selected");
  for (std::size_t a = 0; a < methods.size(); ++a) {
    for (std::size_t b = a + 1; b < methods.size(); ++b) {
      if (methods[a] == methods[b]) throw Error("method '" + std::string(method_name(methods[a])) + "' listed twice");
    }
  }
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["window"] = window;
  j["split"] = split;
  j["lambda_noise"] = lambda_noise;
  j["epochs"] = epochs;
  j["lr"] = learning_rate;
  j["hidden"] = hidden;
  j["dropout"] = dropout;
  j["batch_size"] = batch_size;
  j["early_stop_patience"] = early_stop_patience;
  j["seed"] = seed;
  j["arma_p"] = arma_p.value_or(window);
  j["arma_q"] = arma_q;
  std::vector<std::string> names;
  for (Method m : methods) names.emplace_back(method_name(m));
  j["methods"] = names;
  j["prices"] = prices.generic_string();
  j["news"] = news.generic_string();
  return j.dump();
}

TickerResult run_ticker(const RunConfig& config, Method method, const std::string& ticker,
                        const dataprep::JointSeries& joint) {
  try {
    return method == Method::Arma ? run_arma(config, ticker, joint) : run_lstm(config, method, ticker, joint);
  } catch (const std::exception& e) {
    throw Error(std::string(method_name(method)) + " on " + ticker + ": " + e.what());
  }
}

RunOutcome run_methods(const RunConfig& config, const std::vector<dataprep::PriceSeries>& prices,
                       const std::vector<sentiment::DailySourceScores>& scores) {
  config.validate();
  std::vector<dataprep::JointSeries> joints;
  for (const auto& s : prices) joints.push_back(stage("join " + s.ticker, [&] { return dataprep::join(s, scores); }));

  const std::size_t n_tickers = prices.size();
  const std::size_t n_tasks = config.methods.size() * n_tickers;
  std::vector<std::optional<TickerResult>> results(n_tasks);
  std::vector<std::exception_ptr> errors(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      const std::size_t m = task / n_tickers;
      const std::size_t t = task % n_tickers;
      try {
        results[task] = run_ticker(config, config.methods[m], prices[t].ticker, joints[t]);
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };
  const std::size_t pool = std::min(config.workers, std::max<std::size_t>(n_tasks, 1));
  if (pool <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t k = 0; k < pool; ++k) threads.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RunOutcome outcome;
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    MethodOutcome mo;
    mo.method = config.methods[m];
    mo.track.method = std::string(method_name(mo.method));
    for (std::size_t t = 0; t < n_tickers; ++t) {
      auto& r = *results[m * n_tickers + t];
      mo.track.points.insert(mo.track.points.end(), r.points.begin(), r.points.end());
      mo.tickers.push_back(std::move(r));
    }
    mo.report = stage("evaluate " + mo.track.method, [&] { return eval::evaluate(mo.track); });
    outcome.methods.push_back(std::move(mo));
  }
  if (outcome.methods.size() >= 2) {
    std::vector<eval::EvalReport> reports;
    for (const auto& mo : outcome.methods) reports.push_back(mo.report);
    for (std::size_t k = 1; k < reports.size(); ++k) {
      if (reports[k].days != reports[0].days) {
        warn("methods " + reports[0].method + " and " + reports[k].method +
             " cover different test days; each mean uses its own days");
      }
    }
    outcome.comparison = eval::compare(reports);
  }
  return outcome;
}

RunOutcome cmd_run(const RunConfig& config) {
  config.validate();
  const auto table = stage("load prices", [&] { return dataprep::load_prices(config.prices); });
  const auto scores = stage("load news scores", [&] { return sentiment::read_daily_scores(config.news); });
  auto outcome = run_methods(config, table.series, scores);

  stage("write outputs", [&] {
    const auto& out = config.out;
    std::filesystem::create_directories(out / "joint");
    for (const auto& s : table.series) dataprep::write_joint(out / "joint" / (s.ticker + ".csv"), dataprep::join(s, scores));

    std::vector<eval::PredictionTrack> tracks;
    for (const auto& mo : outcome.methods) {
      nlohmann::ordered_json extra;
      extra["seed"] = config.seed;
      extra["config"] = nlohmann::ordered_json::parse(config.to_json());
      extra["tickers"] = nlohmann::ordered_json::array();
      for (const auto& r : mo.tickers) extra["tickers"].push_back(ticker_summary(r));
      write_text(out / ("report_" + mo.track.method + ".json"), eval::report_json(mo.report, extra.dump()));

      for (const auto& r : mo.tickers) {
        if (r.model && config.checkpoints) {
          std::filesystem::create_directories(out / "checkpoints");
          neural::save_checkpoint(out / "checkpoints" / (mo.track.method + "_" + r.ticker + ".json"), *r.model);
        }
        if (r.arma) {
          nlohmann::ordered_json j;
          j["ticker"] = r.ticker;
          j["mu"] = r.arma->price_arma.mu;
          j["phi"] = r.arma->price_arma.phi;
          j["psi"] = r.arma->price_arma.psi;
          j["alpha"] = r.arma->alpha;
          j["lambda_s"] = r.arma->lambda_s;
          j["c"] = r.arma->c;
          j["sent_coeffs"] = r.arma->sent_coeffs;
          write_text(out / ("arma_params_" + r.ticker + ".json"), j.dump(2) + "\n");
        }
      }
      tracks.push_back(mo.track);
    }
    eval::emit_plot_data(out / "plot", tracks, scores, config.svg);
    if (outcome.comparison) {
      write_text(out / "comparison.csv", outcome.comparison->to_csv());
      write_text(out / "comparison.txt", outcome.comparison->to_text());
    }
  });
  return outcome;
}

ScoreSummary cmd_score(const ScoreOptions& options) {
  const auto lexicon = stage("load lexicon", [&] { return sentiment::load_lexicon(options.lexicon); });
  const auto corpus = stage("load news", [&] { return sentiment::load_news(options.news); });
  const auto calendar = stage("load calendar", [&] { return sentiment::load_calendar(options.calendar); });
  if (calendar.empty()) throw Error("calendar '" + options.calendar.string() + "' holds no dates");
  if (corpus.items.empty()) warn("news corpus is empty; every score is the neutral fill");

  const auto daily = sentiment::aggregate_daily(corpus.items, lexicon, calendar);
  stage("write scores", [&] { sentiment::write_daily_scores(options.out, daily); });

  if (options.wordfreq_dir) {
    stage("write word frequencies", [&] {
      const auto stop = options.stop_words ? sentiment::load_stop_words(*options.stop_words)
                                           : sentiment::default_stop_words();
      std::filesystem::create_directories(*options.wordfreq_dir);
      sentiment::write_word_frequency(*options.wordfreq_dir / "positive_words.csv",
                                      sentiment::word_frequency(corpus.items, lexicon, sentiment::Polarity::Positive, stop));
      sentiment::write_word_frequency(*options.wordfreq_dir / "negative_words.csv",
                                      sentiment::word_frequency(corpus.items, lexicon, sentiment::Polarity::Negative, stop));
    });
  }

  ScoreSummary summary;
  summary.per_source = corpus.per_source;
  summary.skipped_unknown_site = corpus.skipped_unknown_site;
  summary.skipped_empty_title = corpus.skipped_empty_title;
  summary.calendar_days = calendar.size();
  return summary;
}

dataprep::Fixture cmd_fixture(const dataprep::FixtureSpec& spec, const std::filesystem::path& out_dir) {
  auto fx = stage("generate fixture", [&] { return dataprep::generate_fixture(spec); });
  stage("write fixture", [&] { dataprep::write_fixture(out_dir, fx); });
  return fx;
}

}  // namespace newsflow::pipeline
