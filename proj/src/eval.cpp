#include "newsflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "csv.hpp"

namespace newsflow::eval {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

std::vector<TrackPoint> evaluable_points(const PredictionTrack& track) {
  track.validate();
  std::vector<TrackPoint> pts;
  std::size_t skipped = 0;
  for (const auto& p : track.points) {
    if (std::isfinite(p.predicted)) {
      pts.push_back(p);
    } else {
      ++skipped;
    }
  }
  if (skipped > 0) {
    warn(track.method + ": " + std::to_string(skipped) + " point(s) without a usable prediction excluded");
  }
  return pts;
}

double day_mpa(const std::vector<const TrackPoint*>& day) {
  double acc = 0.0;
  for (const auto* p : day) acc += std::abs(p->real - p->predicted) / p->real;
  return 1.0 - acc / static_cast<double>(day.size());
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

void PredictionTrack::validate() const {
  std::set<std::pair<std::string, Date>> seen;
  for (const auto& p : points) {
    if (!(p.real > 0.0) || !std::isfinite(p.real)) {
      throw Error(method + ": real price for " + p.ticker + " on " + format_date(p.date) + " is not positive");
    }
    if (!seen.emplace(p.ticker, p.date).second) {
      throw Error(method + ": duplicate point for " + p.ticker + " on " + format_date(p.date));
    }
  }
}

double mpa(const PredictionTrack& track, const Date& date) {
  track.validate();
  std::vector<const TrackPoint*> day;
  for (const auto& p : track.points) {
    if (p.date == date && std::isfinite(p.predicted)) day.push_back(&p);
  }
  if (day.empty()) throw Error(track.method + ": no predictions on " + format_date(date));
  return day_mpa(day);
}

double mean_mpa(const PredictionTrack& track) { return evaluate(track).mean_mpa; }

EvalReport evaluate(const PredictionTrack& track) {
  const auto pts = evaluable_points(track);
  if (pts.empty()) throw Error(track.method + ": track has no evaluable points");

  std::map<Date, std::vector<const TrackPoint*>> by_day;
  for (const auto& p : pts) by_day[p.date].push_back(&p);

  EvalReport r;
  r.method = track.method;
  for (const auto& [date, day] : by_day) {
    r.days.push_back(date);
    r.per_day_mpa.push_back(day_mpa(day));
  }
  double acc = 0.0;
  for (double m : r.per_day_mpa) acc += m;
  r.mean_mpa = acc / static_cast<double>(r.per_day_mpa.size());

  double sq = 0.0;
  double rel = 0.0;
  for (const auto& p : pts) {
    const double d = p.real - p.predicted;
    sq += d * d;
    rel += std::abs(d) / p.real;
  }
  const auto n = static_cast<double>(pts.size());
  r.mse = sq / n;
  r.mean_error_percent = rel / n;
  r.accuracy = 1.0 - r.mean_error_percent;
  return r;
}

EvalReport index_metrics(const PredictionTrack& track) {
  if (track.points.empty()) throw Error(track.method + ": empty track");
  const auto& ticker = track.points.front().ticker;
  for (const auto& p : track.points) {
    if (p.ticker != ticker) throw Error(track.method + ": index metrics need a single-series track");
  }
  return evaluate(track);
}

ComparisonTable compare(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) throw Error("comparison needs at least two reports");
  ComparisonTable table;
  for (const auto& r : reports) {
    if (std::find(table.methods.begin(), table.methods.end(), r.method) != table.methods.end()) {
      throw Error("duplicate method label '" + r.method + "' in comparison");
    }
    table.methods.push_back(r.method);
  }
  auto column = [&](std::string name, Better better, double EvalReport::*field) {
    MetricColumn col{std::move(name), better, {}, {}};
    for (const auto& r : reports) col.values.push_back(r.*field);
    const double best = better == Better::Higher ? *std::max_element(col.values.begin(), col.values.end())
                                                 : *std::min_element(col.values.begin(), col.values.end());
    for (double v : col.values) col.best.push_back(v == best);
    table.metrics.push_back(std::move(col));
  };
  column("mean_mpa", Better::Higher, &EvalReport::mean_mpa);
  column("mse", Better::Lower, &EvalReport::mse);
  column("accuracy", Better::Higher, &EvalReport::accuracy);
  column("mean_error_percent", Better::Lower, &EvalReport::mean_error_percent);
  return table;
}

std::string ComparisonTable::to_text() const {
  std::size_t method_w = 6;
  for (const auto& m : methods) method_w = std::max(method_w, m.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(method_w)) << "method";
  for (const auto& c : metrics) out << "  " << std::right << std::setw(20) << c.name;
  out << '\n';
  for (std::size_t r = 0; r < methods.size(); ++r) {
    out << std::left << std::setw(static_cast<int>(method_w)) << methods[r];
    for (const auto& c : metrics) {
      out << "  " << std::right << std::setw(20) << (fixed(c.values[r], 9) + (c.best[r] ? " *" : "  "));
    }
    out << '\n';
  }
  out << "(* best per metric)\n";
  return out.str();
}

std::string ComparisonTable::to_csv() const {
  std::ostringstream out;
  out << "method";
  for (const auto& c : metrics) out << ',' << c.name;
  out << ",best\n";
  for (std::size_t r = 0; r < methods.size(); ++r) {
    out << csv::quote(methods[r]);
    std::string best;
    for (const auto& c : metrics) {
      out << ',' << csv::format_double(c.values[r]);
      if (c.best[r]) best += (best.empty() ? "" : ";") + c.name;
    }
    out << ',' << best << '\n';
  }
  return out.str();
}

std::string report_json(const EvalReport& report, const std::string& extra_json) {
  nlohmann::ordered_json doc;
  doc["method"] = report.method;
  doc["mean_mpa"] = report.mean_mpa;
  doc["per_day_mpa"] = report.per_day_mpa;
  std::vector<std::string> days;
  for (const auto& d : report.days) days.push_back(format_date(d));
  doc["days"] = days;
  doc["mse"] = report.mse;
  doc["accuracy"] = report.accuracy;
  doc["mean_error_percent"] = report.mean_error_percent;
  const auto extra = nlohmann::ordered_json::parse(extra_json);
  for (const auto& [key, value] : extra.items()) doc[key] = value;
  return doc.dump(2) + "\n";
}

EvalReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report '" + path.string() + "'");
  try {
    const auto doc = nlohmann::json::parse(in);
    EvalReport r;
    r.method = doc.at("method").get<std::string>();
    r.mean_mpa = doc.at("mean_mpa").get<double>();
    r.per_day_mpa = doc.at("per_day_mpa").get<std::vector<double>>();
    r.mse = doc.at("mse").get<double>();
    r.accuracy = doc.at("accuracy").get<double>();
    r.mean_error_percent = doc.at("mean_error_percent").get<double>();
    if (doc.contains("days")) {
      for (const auto& d : doc["days"]) r.days.push_back(parse_date(d.get<std::string>()));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed report '" + path.string() + "': " + e.what());
  }
}

std::string render_line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                              const std::vector<ChartSeries>& series) {
  constexpr double width = 800.0, height = 400.0;
  constexpr double left = 70.0, right = 160.0, top = 40.0, bottom = 50.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t n = 0;
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) {
    lo = -1.0;
    hi = 1.0;
  } else if (hi == lo) {
    const double pad = std::max(1.0, std::abs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  }
  auto x_of = [&](std::size_t k) {
    return n <= 1 ? left + plot_w / 2.0 : left + plot_w * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title)
      << "</text>\n";
  svg << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  if (lo <= 0.0 && hi >= 0.0) {
    svg << "<line class=\"zero\" x1=\"" << left << "\" y1=\"" << fixed(y_of(0.0), 2) << "\" x2=\"" << left + plot_w
        << "\" y2=\"" << fixed(y_of(0.0), 2) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (double v : {lo, hi}) {
    svg << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y_of(v) + 4, 2)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fixed(v, 3) << "</text>\n";
  }
  if (!x_labels.empty()) {
    for (std::size_t k : {std::size_t{0}, x_labels.size() - 1}) {
      svg << "<text x=\"" << fixed(x_of(k), 2) << "\" y=\"" << top + plot_h + 18
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << xml_escape(x_labels[k])
          << "</text>\n";
    }
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t k = 0; k < series[s].values.size(); ++k) {
      const double v = series[s].values[k];
      if (!std::isfinite(v)) continue;
      svg << (first ? "" : " ") << fixed(x_of(k), 2) << ',' << fixed(y_of(v), 2);
      first = false;
    }
    svg << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(s);
    svg << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 32 << "\" y2=\""
        << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + plot_w + 38 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(series[s].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot_data(const std::filesystem::path& dir, const std::vector<PredictionTrack>& tracks,
                    const std::vector<sentiment::DailySourceScores>& daily, bool svg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  // (date, ticker) -> real price and per-method prediction
  struct Row {
    double real = 0.0;
    std::vector<std::optional<double>> predicted;
  };
  std::map<std::pair<Date, std::string>, Row> rows;
  for (std::size_t m = 0; m < tracks.size(); ++m) {
    for (const auto& p : tracks[m].points) {
      auto& row = rows[{p.date, p.ticker}];
      row.predicted.resize(tracks.size());
      row.real = p.real;
      row.predicted[m] = p.predicted;
    }
  }

  {
    std::ofstream out(dir / "predictions.csv");
    if (!out) throw IoError("cannot write predictions.csv in '" + dir.string() + "'");
    out << "date,ticker,real";
    for (const auto& t : tracks) out << ',' << csv::quote(t.method);
    out << '\n';
    for (const auto& [key, row] : rows) {
      out << format_date(key.first) << ',' << csv::quote(key.second) << ',' << csv::format_double(row.real);
      for (std::size_t m = 0; m < tracks.size(); ++m) {
        out << ',';
        if (m < row.predicted.size() && row.predicted[m]) out << csv::format_double(*row.predicted[m]);
      }
      out << '\n';
    }
    if (!out) throw IoError("write failure on predictions.csv");
  }

  std::vector<double> mean_compound;
  std::vector<std::string> score_dates;
  for (const auto& d : daily) {
    double acc = 0.0;
    for (double v : d.scores) acc += v;
    mean_compound.push_back(acc / static_cast<double>(sentiment::kNumSources));
    score_dates.push_back(format_date(d.date));
  }
  if (!daily.empty()) {
    std::ofstream out(dir / "sentiment.csv");
    if (!out) throw IoError("cannot write sentiment.csv in '" + dir.string() + "'");
    out << "date,mean_compound\n";
    for (std::size_t k = 0; k < daily.size(); ++k) {
      out << score_dates[k] << ',' << csv::format_double(mean_compound[k]) << '\n';
    }
  }

  if (!svg) return;
  std::set<std::string> tickers;
  for (const auto& [key, row] : rows) tickers.insert(key.second);
  for (const auto& ticker : tickers) {
    std::vector<std::string> labels;
    std::vector<ChartSeries> series(1 + tracks.size());
    series[0].label = "real";
    for (std::size_t m = 0; m < tracks.size(); ++m) series[1 + m].label = tracks[m].method;
    for (const auto& [key, row] : rows) {
      if (key.second != ticker) continue;
      labels.push_back(format_date(key.first));
      series[0].values.push_back(row.real);
      for (std::size_t m = 0; m < tracks.size(); ++m) {
        const bool has = m < row.predicted.size() && row.predicted[m].has_value();
        series[1 + m].values.push_back(has ? *row.predicted[m] : std::numeric_limits<double>::quiet_NaN());
      }
    }
    std::ofstream out(dir / ("predictions_" + ticker + ".svg"));
    out << render_line_chart("Predicted vs real price: " + ticker, labels, series);
  }
  if (!daily.empty()) {
    std::ofstream out(dir / "sentiment.svg");
    out << render_line_chart("Mean daily compound score", score_dates, {ChartSeries{"mean compound", mean_compound}});
  }
}

}  // namespace newsflow::eval

namespace newsflow::eval {

std::vector<PredictionTrack> read_prediction_tracks(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::size_t date_col = table.column("date");
  const std::size_t ticker_col = table.column("ticker");
  const std::size_t real_col = table.column("real");
  std::vector<PredictionTrack> tracks;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == date_col || c == ticker_col || c == real_col) continue;
    tracks.push_back(PredictionTrack{table.header[c], {}});
    cols.push_back(c);
  }
  auto number = [&](const std::string& field, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size()) {
      throw ParseError(table.source, line, "expected a number, got '" + field + "'");
    }
    return v;
  };
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    if (row.size() != table.header.size()) throw ParseError(table.source, line, "wrong number of fields");
    Date date;
    try {
      date = parse_date(row[date_col]);
    } catch (const std::exception& e) {
      throw ParseError(table.source, line, e.what());
    }
    const double real = number(row[real_col], line);
    for (std::size_t m = 0; m < cols.size(); ++m) {
      if (row[cols[m]].empty()) continue;
      tracks[m].points.push_back(TrackPoint{row[ticker_col], date, real, number(row[cols[m]], line)});
    }
  }
  return tracks;
}

}  // namespace newsflow::eval
