// Acceptance checks, one line per criterion. Pass criterion numbers as
// arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "newsflow/pipeline.hpp"

using namespace newsflow;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("newsflow-acceptance-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome gradient_oracle() {
  using namespace neural;
  const auto start = Clock::now();
  const auto cfg = NetworkConfig::default_stack(2, 0.0, 5);
  auto params = initialize(cfg, 2024);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& t : params.tensors()) {
    if (t.cols == 1) {
      for (double& v : t.data) v += 0.3 * u(rng);
    }
  }
  std::vector<Matrix> x;
  for (int b = 0; b < 4; ++b) {
    Matrix w(3, 5);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    x.push_back(w);
  }
  const std::vector<double> y = {0.4, -0.3, 0.9, 0.05};

  auto loss_at = [&](const NetworkParams& p) {
    std::mt19937_64 r(7);
    return loss_and_gradients(cfg, p, x, y, Mode::Train, r).loss;
  };
  std::mt19937_64 r(7);
  const auto analytic = loss_and_gradients(cfg, params, x, y, Mode::Train, r).gradients;
  const auto grads = analytic.tensors();

  const double h = 1e-5;
  double worst = 0.0;
  std::string worst_name;
  std::size_t count = 0;
  auto probe = params;
  auto refs = probe.tensors();
  for (std::size_t k = 0; k < refs.size(); ++k) {
    for (std::size_t j = 0; j < refs[k].data.size(); ++j) {
      double& w = refs[k].data[j];
      const double saved = w;
      w = saved + h;
      const double up = loss_at(probe);
      w = saved - h;
      const double down = loss_at(probe);
      w = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[k].data[j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > worst) {
        worst = rel;
        worst_name = refs[k].name + "[" + std::to_string(j) + "]";
      }
      ++count;
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 10.0,
          fmt("max relative error %.2e at %s over %zu parameters, %.2f s", worst, worst_name.c_str(), count, elapsed)};
}

Outcome adam_oracle() {
  const std::size_t n = 6;
  const std::vector<double> curvature = {1.0, 3.0, 0.5, 10.0, 0.1, 2.0};
  const std::vector<double> centre = {1.0, -2.0, 0.5, 3.0, -0.25, 0.0};
  std::vector<double> w(n, 0.0), ref_w(n, 0.0);
  neural::AdamState state;
  state.hyper.learning_rate = 0.05;

  // Reference: textbook ADAM with bias-corrected moments.
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::vector<double> m(n, 0.0), v(n, 0.0);
  double b1_pow = 1.0, b2_pow = 1.0;

  double worst = 0.0;
  for (int step = 1; step <= 100; ++step) {
    std::vector<double> g(n), ref_g(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = curvature[i] * (w[i] - centre[i]);
      ref_g[i] = curvature[i] * (ref_w[i] - centre[i]);
    }
    std::vector<std::span<double>> ps = {std::span<double>(w)};
    std::vector<std::span<const double>> gs = {std::span<const double>(g)};
    neural::adam_step(state, ps, gs);

    b1_pow *= b1;
    b2_pow *= b2;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1 - b1) * ref_g[i];
      v[i] = b2 * v[i] + (1 - b2) * ref_g[i] * ref_g[i];
      ref_w[i] -= lr * (m[i] / (1 - b1_pow)) / (std::sqrt(v[i] / (1 - b2_pow)) + eps);
      worst = std::max(worst, std::abs(w[i] - ref_w[i]));
    }
  }
  return {worst <= 1e-10, fmt("max per-step deviation %.2e over 100 steps x %zu parameters", worst, n)};
}

Outcome normalization_round_trip() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> level(1.0, 1000.0), rel(-0.05, 0.05);
  double worst = 0.0;
  std::size_t windows = 0;
  while (windows < 10000) {
    std::vector<double> x(10);
    const double base = level(rng);
    for (auto& v : x) v = base * (1.0 + rel(rng));
    dataprep::NormalizedWindow n;
    try {
      n = dataprep::normalize_window(x);
    } catch (const dataprep::DegenerateWindow&) {
      continue;
    }
    ++windows;
    for (std::size_t i = 0; i < x.size(); ++i) {
      worst = std::max(worst, std::abs(dataprep::denormalize(n.values[i], n.meta) - x[i]));
    }
  }
  return {worst < 1e-12, fmt("max |denormalize(normalize(x)) - x| = %.2e over %zu windows", worst, windows)};
}

Outcome noise_statistics() {
  const std::size_t n = 1000000;
  dataprep::JointSeries joint;
  joint.dates.resize(n);
  joint.rows.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    joint.rows[t] = {100.0, 0.0, t % 2 == 0 ? 0.2 : -0.2, 0.0, 0.0};
  }
  const double source_var = dataprep::estimate_source_variance(joint, 1, n);

  dataprep::NoiseConfig cfg;
  cfg.lambda_n = 0.5;
  cfg.seed = 2718;
  cfg.variances[1] = source_var;
  const auto noisy = dataprep::add_noise(joint, 1, cfg);
  double mean = 0.0;
  for (std::size_t t = 0; t < n; ++t) mean += noisy.rows[t][2] - joint.rows[t][2];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double d = noisy.rows[t][2] - joint.rows[t][2] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  const double rel_err = std::abs(var - 0.02) / 0.02;

  cfg.lambda_n = 0.0;
  const auto same = dataprep::add_noise(joint, 1, cfg);
  const bool identical =
      std::memcmp(same.rows.data(), joint.rows.data(), n * sizeof(dataprep::JointRow)) == 0;
  return {std::abs(source_var - 0.04) < 1e-12 && rel_err < 0.01 && identical,
          fmt("source variance %.6f, noise sample variance %.6f (%.3f%% from 0.02), lambda 0 identical: %s",
              source_var, var, 100.0 * rel_err, identical ? "yes" : "no")};
}

Outcome window_arithmetic() {
  dataprep::FixtureSpec spec;
  spec.tickers = 1;
  const auto fx = dataprep::generate_fixture(spec);
  const auto joint = dataprep::join(fx.prices[0], fx.scores);
  const auto ds = dataprep::build_windows(joint, 10, 0.85);
  dataprep::NoiseConfig noise;
  noise.seed = 1;
  const auto dp = dataprep::build_augmented_trainset(joint, 10, 0.85, noise);
  const bool ok = joint.size() == 121 && ds.train.size() == 92 && ds.test.size() == 9 && dp.train.size() == 368 &&
                  dp.test.size() == 9;
  return {ok, fmt("%zu dates -> %zu train / %zu test windows, augmented train %zu", joint.size(), ds.train.size(),
                  ds.test.size(), dp.train.size())};
}

Outcome arma_recovery() {
  const std::size_t n = 500;
  std::vector<double> clean(n);
  clean[0] = 1.0;
  for (std::size_t t = 1; t < n; ++t) clean[t] = 0.5 * clean[t - 1];
  const double phi_clean = baseline::arma_fit(clean, 1, 0).phi[0];

  std::mt19937_64 rng(42);
  std::normal_distribution<double> e(0.0, 0.1);
  std::vector<double> noisy(n);
  noisy[0] = 1.0;
  for (std::size_t t = 1; t < n; ++t) noisy[t] = 0.5 * noisy[t - 1] + e(rng);
  const double phi_noisy = baseline::arma_fit(noisy, 1, 0).phi[0];

  const double err_clean = std::abs(phi_clean - 0.5);
  const double err_noisy = std::abs(phi_noisy - 0.5);
  return {err_clean < 1e-6 && err_noisy < 0.05,
          fmt("noiseless phi %.10f (error %.1e), sigma 0.1 phi %.4f (error %.4f)", phi_clean, err_clean, phi_noisy,
              err_noisy)};
}

Outcome learnability() {
  const auto fx = dataprep::generate_fixture(dataprep::FixtureSpec{});
  pipeline::RunConfig cfg;
  bool ok = true;
  std::ostringstream detail;
  for (const auto& series : fx.prices) {
    const auto start = Clock::now();
    const auto joint = dataprep::join(series, fx.scores);
    const auto r = pipeline::run_ticker(cfg, pipeline::Method::LstmNews, series.ticker, joint);
    const double elapsed = seconds_since(start);
    const double ratio = r.train_mse / r.target_variance;
    ok = ok && ratio < 0.1 && elapsed < 120.0;
    detail << series.ticker << fmt(" mse/var %.3f in %.1f s; ", ratio, elapsed);
  }
  return {ok, detail.str() + "need < 0.100 and < 120 s"};
}

Outcome robustness_direction() {
  int dp_wins = 0;
  std::ostringstream detail;
  const auto start = Clock::now();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    dataprep::FixtureSpec spec;
    spec.seed = seed;
    spec.tickers = 1;
    spec.spike_rate = 0.5;
    const auto fx = dataprep::generate_fixture(spec);
    pipeline::RunConfig cfg;
    cfg.seed = seed;
    cfg.methods = {pipeline::Method::LstmNews, pipeline::Method::DpLstm};
    const auto out = pipeline::run_methods(cfg, fx.prices, fx.scores);
    const double news = out.methods[0].report.mse;
    const double dp = out.methods[1].report.mse;
    if (dp <= news) ++dp_wins;
  }
  detail << fmt("dp-lstm test MSE <= lstm-news in %d/20 seeds (need >= 13), %.0f s", dp_wins, seconds_since(start));
  return {dp_wins >= 13, detail.str()};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> price(5.0, 400.0), err(-0.1, 0.1);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    eval::PredictionTrack t{"m", {}};
    const int days = 1 + static_cast<int>(rng() % 15);
    const int stocks = 1 + static_cast<int>(rng() % 8);
    for (int d = 0; d < days; ++d) {
      const Date date{std::chrono::sys_days{std::chrono::year{2018} / 5 / 1} + std::chrono::days{d}};
      for (int s = 0; s < stocks; ++s) {
        if (rng() % 5 == 0) continue;
        const double real = price(rng);
        t.points.push_back({"S" + std::to_string(s), date, real, real * (1.0 + err(rng))});
      }
    }
    if (t.points.empty()) continue;
    // brute force: for each distinct day, scan every point
    std::set<Date> dates;
    for (const auto& p : t.points) dates.insert(p.date);
    double mpa_sum = 0.0;
    for (const auto& d : dates) {
      double acc = 0.0;
      int count = 0;
      for (const auto& p : t.points) {
        if (p.date == d) {
          acc += std::abs(p.real - p.predicted) / p.real;
          ++count;
        }
      }
      mpa_sum += 1.0 - acc / count;
    }
    double sq = 0.0, rel = 0.0;
    for (const auto& p : t.points) {
      sq += (p.real - p.predicted) * (p.real - p.predicted);
      rel += std::abs(p.real - p.predicted) / p.real;
    }
    const double n = static_cast<double>(t.points.size());
    const auto r = eval::evaluate(t);
    worst = std::max({worst, std::abs(r.mean_mpa - mpa_sum / dates.size()), std::abs(r.mse - sq / n) / std::max(1.0, sq / n),
                      std::abs(r.mean_error_percent - rel / n), std::abs(r.accuracy - (1.0 - rel / n))});
  }

  auto row = [](std::string m, double mpa, double mse, double acc, double mep) {
    eval::EvalReport r;
    r.method = std::move(m);
    r.mean_mpa = mpa;
    r.mse = mse;
    r.accuracy = acc;
    r.mean_error_percent = mep;
    return r;
  };
  const auto table = eval::compare({row("lstm-no-news", 0.978305309, 580.9226827, 0.99263803, 0.00736197),
                                    row("lstm-news", 0.978366682, 536.6306251, 0.99292492, 0.00707508),
                                    row("dp-lstm", 0.981582666, 198.7500672, 0.99582651, 0.00417349)});
  bool dp_best = true;
  for (const auto& col : table.metrics) dp_best = dp_best && col.best == std::vector<bool>{false, false, true};
  return {worst < 1e-12 && dp_best,
          fmt("max deviation from brute force %.2e over 200 tracks; published table flags dp-lstm on all metrics: %s",
              worst, dp_best ? "yes" : "no")};
}

Outcome determinism() {
  const auto dir = scratch("determinism");
  dataprep::FixtureSpec spec;
  pipeline::cmd_fixture(spec, dir / "fx");
  pipeline::RunConfig cfg;
  cfg.prices = dir / "fx" / "prices.csv";
  cfg.news = dir / "fx" / "scores.csv";
  cfg.epochs = 20;
  cfg.methods = {pipeline::Method::Arma, pipeline::Method::LstmNews, pipeline::Method::DpLstm};
  cfg.out = dir / "first";
  pipeline::cmd_run(cfg);
  cfg.out = dir / "second";
  pipeline::cmd_run(cfg);
  bool same = true;
  std::size_t compared = 0;
  for (const char* name : {"report_arma.json", "report_lstm-news.json", "report_dp-lstm.json"}) {
    const auto a = slurp(dir / "first" / name);
    const auto b = slurp(dir / "second" / name);
    same = same && !a.empty() && a == b;
    ++compared;
  }
  std::filesystem::remove_all(dir);
  return {same, fmt("%zu report files byte-identical across two runs: %s", compared, same ? "yes" : "no")};
}

Outcome sentiment_invariants() {
  const auto lex = sentiment::load_lexicon(std::filesystem::path(NEWSFLOW_DATA_DIR) / "lexicon.tsv");
  std::vector<std::string> vocab;
  for (const auto& [w, v] : lex.entries) vocab.push_back(w);
  for (const auto& [w, v] : lex.boosters) vocab.push_back(w);
  for (const auto& w : lex.negators) vocab.push_back(w);
  for (const char* w : {"the", "market", "shares", "!!!", "...", "U.S.", "\xE2\x80\x99", "'", "42%", "\xC3\xA9t\xC3\xA9"}) {
    vocab.emplace_back(w);
  }
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1), len(0, 30);
  std::uniform_int_distribution<int> byte(1, 255);
  double worst_sum = 0.0;
  bool in_range = true;
  for (int k = 0; k < 10000; ++k) {
    std::string text;
    for (std::size_t n = len(rng); n > 0; --n) {
      if (rng() % 10 == 0) {
        text.push_back(static_cast<char>(byte(rng)));
      } else {
        text += vocab[pick(rng)];
      }
      text.push_back(rng() % 7 == 0 ? ',' : ' ');
    }
    const auto s = sentiment::score_text(lex, text);
    worst_sum = std::max(worst_sum, std::abs(s.pos + s.neg + s.neu - 1.0));
    in_range = in_range && s.compound >= -1.0 && s.compound <= 1.0 && std::isfinite(s.compound);
  }
  const double good = sentiment::score_text(lex, "good").compound;
  const double oracle = 1.9 / std::sqrt(1.9 * 1.9 + 15.0);
  const bool good_ok = std::abs(good - oracle) < 1e-4 && std::abs(good - 0.4404) < 1e-4;
  return {worst_sum < 1e-6 && in_range && good_ok,
          fmt("max |pos+neg+neu-1| %.1e over 10000 strings, compound in range: %s, \"good\" -> %.4f (oracle %.4f)",
              worst_sum, in_range ? "yes" : "no", good, oracle)};
}

}  // namespace

int main(int argc, char** argv) {
  set_warning_sink([](const std::string&) {});
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"adam oracle", adam_oracle},
      {"normalization round trip", normalization_round_trip},
      {"noise statistics", noise_statistics},
      {"window arithmetic", window_arithmetic},
      {"arma recovery", arma_recovery},
      {"learnability", learnability},
      {"robustness direction", robustness_direction},
      {"metric oracles", metric_oracles},
      {"determinism", determinism},
      {"sentiment invariants", sentiment_invariants},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    Outcome out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    if (!out.pass) ++failures;
    std::printf("criterion %2d %s  %-26s %s\n", id, out.pass ? "PASS" : "FAIL", criteria[k].first, out.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
