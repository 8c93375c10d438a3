#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "newsflow/eval.hpp"
#include "support.hpp"

using namespace newsflow;
using namespace newsflow::eval;

namespace {

Date day(unsigned d) { return Date{std::chrono::year{2018}, std::chrono::May, std::chrono::day{d}}; }

EvalReport table_row(std::string method, double mpa, double mse, double acc, double mep) {
  EvalReport r;
  r.method = std::move(method);
  r.mean_mpa = mpa;
  r.mse = mse;
  r.accuracy = acc;
  r.mean_error_percent = mep;
  return r;
}

}  // namespace

TEST_CASE("two stocks over two days give the hand-computed mean MPA") {
  PredictionTrack t{"m",
                    {{"A", day(1), 100.0, 90.0}, {"B", day(1), 50.0, 55.0},
                     {"A", day(2), 100.0, 100.0}, {"B", day(2), 50.0, 40.0}}};
  // day 1: 1 - (0.1 + 0.1)/2 = 0.9, day 2: 1 - (0 + 0.2)/2 = 0.9
  CHECK(mpa(t, day(1)) == doctest::Approx(0.9));
  CHECK(mpa(t, day(2)) == doctest::Approx(0.9));
  CHECK(mean_mpa(t) == doctest::Approx(0.90));
  const auto r = evaluate(t);
  CHECK(r.mse == doctest::Approx((100.0 + 25.0 + 0.0 + 100.0) / 4));
  CHECK(r.mean_error_percent == doctest::Approx((0.1 + 0.1 + 0.0 + 0.2) / 4));
  CHECK(r.accuracy == doctest::Approx(1.0 - r.mean_error_percent));
  CHECK(r.days == std::vector<Date>{day(1), day(2)});
  CHECK_THROWS_AS(mpa(t, day(9)), Error);
}

TEST_CASE("perfect predictions score MPA one and MSE zero") {
  PredictionTrack t{"m", {{"A", day(1), 10.0, 10.0}, {"A", day(2), 12.0, 12.0}}};
  const auto r = evaluate(t);
  CHECK(r.mean_mpa == 1.0);
  CHECK(r.mse == 0.0);
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("tracks are validated and unusable predictions excluded") {
  CHECK_THROWS_AS(evaluate(PredictionTrack{"m", {{"A", day(1), 0.0, 1.0}}}), Error);
  CHECK_THROWS_AS(evaluate(PredictionTrack{"m", {{"A", day(1), 1.0, 1.0}, {"A", day(1), 2.0, 1.0}}}), Error);
  CHECK_THROWS_AS(evaluate(PredictionTrack{"m", {}}), Error);
  std::vector<std::string> warnings;
  set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  const auto r = evaluate(PredictionTrack{"m", {{"A", day(1), 10.0, std::nan("")}, {"A", day(2), 10.0, 9.0}}});
  set_warning_sink([](const std::string&) {});
  CHECK(r.days.size() == 1);
  CHECK(r.mse == doctest::Approx(1.0));
  CHECK(warnings.size() == 1);
}

TEST_CASE("index metrics insist on one series") {
  PredictionTrack one{"i", {{"SPX", day(1), 2700.0, 2690.0}, {"SPX", day(2), 2710.0, 2720.0}}};
  CHECK(index_metrics(one).mse == doctest::Approx(100.0));
  PredictionTrack two{"i", {{"SPX", day(1), 2700.0, 2690.0}, {"NDX", day(1), 7000.0, 7000.0}}};
  CHECK_THROWS_AS(index_metrics(two), Error);
}

TEST_CASE("randomized tracks agree with a brute-force recomputation") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> price(20.0, 300.0), err(-0.05, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    PredictionTrack t{"m", {}};
    for (unsigned d = 1; d <= 9; ++d) {
      for (int s = 0; s < 5; ++s) {
        const double real = price(rng);
        t.points.push_back({"S" + std::to_string(s), day(d), real, real * (1.0 + err(rng))});
      }
    }
    std::shuffle(t.points.begin(), t.points.end(), rng);
    std::map<Date, std::pair<double, int>> per_day;
    double sq = 0.0, rel = 0.0;
    for (const auto& p : t.points) {
      per_day[p.date].first += std::abs(p.real - p.predicted) / p.real;
      per_day[p.date].second += 1;
      sq += (p.real - p.predicted) * (p.real - p.predicted);
      rel += std::abs(p.real - p.predicted) / p.real;
    }
    double mean = 0.0;
    for (const auto& [d, v] : per_day) mean += 1.0 - v.first / v.second;
    mean /= static_cast<double>(per_day.size());
    const auto r = evaluate(t);
    CHECK(std::abs(r.mean_mpa - mean) < 1e-12);
    CHECK(std::abs(r.mse - sq / t.points.size()) < 1e-12 * std::max(1.0, r.mse));
    CHECK(std::abs(r.mean_error_percent - rel / t.points.size()) < 1e-12);
  }
}

TEST_CASE("compare flags the best value per metric and all ties") {
  const auto table = compare({table_row("a", 0.9, 10.0, 0.95, 0.05), table_row("b", 0.95, 10.0, 0.97, 0.03),
                              table_row("c", 0.8, 12.0, 0.97, 0.03)});
  REQUIRE(table.metrics.size() == 4);
  CHECK(table.metrics[0].best == std::vector<bool>{false, true, false});
  CHECK(table.metrics[1].best == std::vector<bool>{true, true, false});
  CHECK(table.metrics[2].best == std::vector<bool>{false, true, true});
  CHECK(table.metrics[3].best == std::vector<bool>{false, true, true});
  const auto csv = table.to_csv();
  CHECK(csv.find("method,mean_mpa,mse,accuracy,mean_error_percent,best\n") == 0);
  CHECK(csv.find("b,0.95,10,0.97,0.03,mean_mpa;mse;accuracy;mean_error_percent\n") != std::string::npos);
  CHECK(table.to_text().find('*') != std::string::npos);
  CHECK_THROWS_AS(compare({table_row("a", 1, 1, 1, 0)}), Error);
  CHECK_THROWS_AS(compare({table_row("a", 1, 1, 1, 0), table_row("a", 1, 1, 1, 0)}), Error);
}

TEST_CASE("published comparison numbers flag DP-LSTM on every metric") {
  const auto table = compare({table_row("LSTM without news", 0.978305309, 580.9226827, 0.99263803, 0.00736197),
                              table_row("LSTM with news", 0.978366682, 536.6306251, 0.99292492, 0.00707508),
                              table_row("DP-LSTM", 0.981582666, 198.7500672, 0.99582651, 0.00417349)});
  for (const auto& col : table.metrics) {
    CAPTURE(col.name);
    CHECK(col.best == std::vector<bool>{false, false, true});
  }
}

TEST_CASE("report JSON round trips and keeps key order") {
  TempDir dir;
  PredictionTrack t{"dp-lstm", {{"A", day(1), 100.0, 99.0}, {"A", day(2), 100.0, 101.5}}};
  const auto r = evaluate(t);
  const auto json = report_json(r, R"({"seed": 42})");
  CHECK(json.find("\"method\"") < json.find("\"mean_mpa\""));
  CHECK(json.find("\"mse\"") < json.find("\"seed\""));
  write_text(dir / "r.json", json);
  const auto back = read_report_json(dir / "r.json");
  CHECK(back.method == "dp-lstm");
  CHECK(back.mean_mpa == r.mean_mpa);
  CHECK(back.mse == r.mse);
  CHECK(back.days == r.days);
  write_text(dir / "bad.json", "{\"method\": 1}");
  CHECK_THROWS_AS(read_report_json(dir / "bad.json"), Error);
}

TEST_CASE("line chart draws one polyline per series and a zero line when in range") {
  const auto svg = render_line_chart("t", {"a", "b", "c"}, {{"up", {-1.0, 0.0, 1.0}}, {"flat", {0.5, 0.5, 0.5}}});
  CHECK(svg.find("<svg") == 0);
  std::size_t n = 0;
  for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++n;
  CHECK(n == 2);
  CHECK(svg.find("class=\"zero\"") != std::string::npos);
  const auto positive = render_line_chart("p", {"a", "b"}, {{"s", {5.0, 6.0}}});
  CHECK(positive.find("class=\"zero\"") == std::string::npos);
  CHECK_NOTHROW(render_line_chart("const", {"a", "b"}, {{"s", {3.0, 3.0}}}));
}

TEST_CASE("plot data: predictions CSV reads back into the same tracks") {
  TempDir dir;
  std::vector<PredictionTrack> tracks = {
      {"lstm-news", {{"A", day(1), 100.0, 99.0}, {"B", day(1), 50.0, 51.0}, {"A", day(2), 101.0, 100.5}}},
      {"dp-lstm", {{"A", day(1), 100.0, 99.5}, {"B", day(1), 50.0, 50.2}}},
  };
  std::vector<sentiment::DailySourceScores> daily = {{day(1), {0.25, 0.5, 0.0, -0.25}, {1, 1, 0, 1}}};
  emit_plot_data(dir.path(), tracks, daily, true);
  CHECK(std::filesystem::exists(dir / "predictions_A.svg"));
  CHECK(std::filesystem::exists(dir / "sentiment.svg"));
  CHECK(read_text(dir / "sentiment.csv") == "date,mean_compound\n2018-05-01,0.125\n");
  const auto back = read_prediction_tracks(dir / "predictions.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].method == "lstm-news");
  CHECK(back[0].points.size() == 3);
  CHECK(back[1].points.size() == 2);
  CHECK(evaluate(back[0]).mse == evaluate(tracks[0]).mse);

  TempDir empty;
  emit_plot_data(empty.path(), {}, {}, false);
  CHECK(read_text(empty / "predictions.csv") == "date,ticker,real\n");
}
