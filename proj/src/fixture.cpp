#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "newsflow/dataprep.hpp"

namespace newsflow::dataprep {

namespace {

std::vector<Date> weekday_calendar(const Date& start, std::size_t count) {
  using namespace std::chrono;
  std::vector<Date> out;
  sys_days day{start};
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) out.emplace_back(day);
    day += days{1};
  }
  return out;
}

}  // namespace

Fixture generate_fixture(const FixtureSpec& spec) {
  if (spec.days < 2) throw Error("fixture needs at least two days");
  if (spec.tickers == 0) throw Error("fixture needs at least one ticker");
  if (spec.spike_source >= sentiment::kNumSources) throw Error("spike source index out of range");
  if (!(spec.spike_rate >= 0.0 && spec.spike_rate <= 1.0)) throw Error("spike rate must lie in [0, 1]");

  Fixture fx;
  fx.spec = spec;
  const auto dates = weekday_calendar(parse_date(spec.start_date), spec.days);

  // Latent market mood and four noisy published views of it.
  std::mt19937_64 news_rng(mix_seed(spec.seed, "news"));
  std::normal_distribution<double> mood_step(0.0, spec.sentiment_std);
  std::normal_distribution<double> source_noise(0.0, spec.source_std);
  std::vector<double> mood(spec.days, 0.0);
  fx.scores.resize(spec.days);
  for (std::size_t t = 0; t < spec.days; ++t) {
    const double prev = t > 0 ? mood[t - 1] : 0.0;
    mood[t] = std::clamp(spec.sentiment_persistence * prev + mood_step(news_rng), -0.9, 0.9);
    auto& row = fx.scores[t];
    row.date = dates[t];
    for (std::size_t s = 0; s < sentiment::kNumSources; ++s) {
      row.scores[s] = std::clamp(mood[t] + source_noise(news_rng), -1.0, 1.0);
      row.counts[s] = 1;
    }
  }

  // Prices react to the previous day's published mean sentiment.
  std::vector<double> mean_sent(spec.days, 0.0);
  for (std::size_t t = 0; t < spec.days; ++t) {
    double acc = 0.0;
    for (double v : fx.scores[t].scores) acc += v;
    mean_sent[t] = acc / static_cast<double>(sentiment::kNumSources);
  }
  for (std::size_t k = 0; k < spec.tickers; ++k) {
    std::mt19937_64 rng(mix_seed(spec.seed, "ticker-" + std::to_string(k)));
    std::uniform_real_distribution<double> level_dist(50.0, 150.0);
    std::normal_distribution<double> shock(0.0, spec.sigma);
    const double level = level_dist(rng);
    PriceSeries s;
    char name[16];
    std::snprintf(name, sizeof name, "SYN%03zu", k);
    s.ticker = name;
    s.dates = dates;
    double dev = shock(rng);
    for (std::size_t t = 0; t < spec.days; ++t) {
      if (t > 0) dev = spec.phi * dev + spec.kappa * mean_sent[t - 1] + shock(rng);
      s.prices.push_back(std::max(level + dev, 1.0));
    }
    fx.levels.push_back(level);
    fx.prices.push_back(std::move(s));
  }

  // Adversarial spikes: the chosen source reports the opposite extreme of the
  // market mood on some of the last training dates. Prices are unaffected.
  if (spec.spike_rate > 0.0) {
    std::mt19937_64 spike_rng(mix_seed(spec.seed, "spikes"));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n_train = train_length(spec.days, spec.split);
    const std::size_t begin = n_train > spec.spike_span ? n_train - spec.spike_span : 0;
    for (std::size_t t = begin; t < n_train; ++t) {
      if (unit(spike_rng) >= spec.spike_rate) continue;
      const double sign = mood[t] > 0.0 ? -1.0 : 1.0;
      fx.scores[t].scores[spec.spike_source] = sign * spec.spike_magnitude;
      fx.spike_dates.push_back(dates[t]);
    }
  }
  return fx;
}

void write_fixture(const std::filesystem::path& dir, const Fixture& fx) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_prices(dir / "prices.csv", fx.prices);
  sentiment::write_daily_scores(dir / "scores.csv", fx.scores);

  const auto& spec = fx.spec;
  nlohmann::json tickers = nlohmann::json::array();
  for (std::size_t k = 0; k < fx.prices.size(); ++k) {
    tickers.push_back({{"ticker", fx.prices[k].ticker}, {"level", fx.levels[k]}});
  }
  nlohmann::json spikes = nlohmann::json::array();
  for (const auto& d : fx.spike_dates) spikes.push_back(format_date(d));
  const nlohmann::json truth = {
      {"seed", spec.seed},
      {"days", spec.days},
      {"start_date", spec.start_date},
      {"window", spec.window},
      {"split", spec.split},
      {"price_model", {{"phi", spec.phi}, {"kappa", spec.kappa}, {"sigma", spec.sigma}, {"tickers", tickers}}},
      {"sentiment_model",
       {{"persistence", spec.sentiment_persistence},
        {"innovation_std", spec.sentiment_std},
        {"source_std", spec.source_std}}},
      {"adversarial", spec.spike_rate > 0.0},
      {"spike_rate", spec.spike_rate},
      {"spike_source", std::string(sentiment::source_key(sentiment::kAllSources[spec.spike_source]))},
      {"spike_span", spec.spike_span},
      {"spike_magnitude", spec.spike_magnitude},
      {"spike_dates", spikes},
  };
  std::ofstream out(dir / "truth.json");
  if (!out) throw IoError("cannot write truth.json in '" + dir.string() + "'");
  out << truth.dump(2) << '\n';
}

}  // namespace newsflow::dataprep
