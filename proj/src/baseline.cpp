#include "newsflow/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace newsflow::baseline {

namespace {

Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                                    const FitOptions& options) {
  if (design.rows() < design.cols()) {
    throw SingularSystem("least-squares system is underdetermined (" + std::to_string(design.rows()) +
                         " rows, " + std::to_string(design.cols()) + " unknowns)");
  }
  Eigen::VectorXd solution;
  if (options.ridge) {
    Eigen::MatrixXd normal = design.transpose() * design;
    normal.diagonal().array() += options.ridge_epsilon;
    solution = normal.ldlt().solve(design.transpose() * target);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-12);
    if (qr.rank() < design.cols()) {
      throw SingularSystem("normal equations are singular (rank " + std::to_string(qr.rank()) + " < " +
                           std::to_string(design.cols()) + ")");
    }
    solution = qr.solve(target);
  }
  if (!solution.allFinite()) throw SingularSystem("least-squares solution is not finite");
  return solution;
}

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(std::string(what) + " contains a non-finite value");
  }
}

ArmaParams solve_arma(std::span<const double> series, std::size_t p, std::size_t q,
                      std::span<const double> residuals, const FitOptions& options) {
  const std::size_t n = series.size();
  const auto rows = static_cast<Eigen::Index>(n - p);
  const auto cols = static_cast<Eigen::Index>(1 + p + q);
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd target(rows);
  for (std::size_t t = p; t < n; ++t) {
    const auto r = static_cast<Eigen::Index>(t - p);
    design(r, 0) = 1.0;
    for (std::size_t i = 1; i <= p; ++i) design(r, static_cast<Eigen::Index>(i)) = series[t - i];
    for (std::size_t j = 1; j <= q; ++j) {
      design(r, static_cast<Eigen::Index>(p + j)) = t >= j ? -residuals[t - j] : 0.0;
    }
    target(r) = series[t];
  }
  const Eigen::VectorXd beta = solve_least_squares(design, target, options);
  ArmaParams params;
  params.mu = beta(0);
  params.phi.assign(beta.data() + 1, beta.data() + 1 + p);
  params.psi.assign(beta.data() + 1 + p, beta.data() + 1 + p + q);
  return params;
}

}  // namespace

void ResidualState::push(double residual) {
  if (eps_.empty()) return;
  std::rotate(eps_.rbegin(), eps_.rbegin() + 1, eps_.rend());
  eps_.front() = residual;
}

double arma_predict(const ArmaParams& params, std::span<const double> history, const ResidualState& residuals) {
  const std::size_t p = params.p();
  const std::size_t q = params.q();
  if (history.size() < p) {
    throw InsufficientHistory("ARMA(" + std::to_string(p) + "," + std::to_string(q) + ") needs " +
                              std::to_string(p) + " past values, got " + std::to_string(history.size()));
  }
  if (residuals.size() < q) {
    throw InsufficientHistory("residual state holds " + std::to_string(residuals.size()) + " values, need " +
                              std::to_string(q));
  }
  double ar = 0.0;
  for (std::size_t i = 1; i <= p; ++i) ar += params.phi[i - 1] * history[history.size() - i];
  double ma = 0.0;
  for (std::size_t j = 1; j <= q; ++j) ma += params.psi[j - 1] * residuals.lag(j);
  return params.mu + ar - ma;
}

std::vector<double> arma_residuals(const ArmaParams& params, std::span<const double> series) {
  const std::size_t p = params.p();
  std::vector<double> eps(series.size(), 0.0);
  ResidualState state(params.q());
  for (std::size_t t = p; t < series.size(); ++t) {
    eps[t] = series[t] - arma_predict(params, series.subspan(0, t), state);
    state.push(eps[t]);
  }
  return eps;
}

ArmaParams arma_fit(std::span<const double> series, std::size_t p, std::size_t q, const FitOptions& options) {
  if (series.size() < p + q + 2) {
    throw InsufficientHistory("series of length " + std::to_string(series.size()) + " is too short for ARMA(" +
                              std::to_string(p) + "," + std::to_string(q) + ")");
  }
  check_finite(series, "series");
  const std::vector<double> zeros(series.size(), 0.0);
  if (q == 0) return solve_arma(series, p, 0, zeros, options);

  // Residual columns start at zero, which would make the MA block singular:
  // seed with the pure AR fit, then refresh residuals and refit.
  ArmaParams params = solve_arma(series, p, 0, zeros, options);
  params.psi.assign(q, 0.0);
  for (int iter = 0; iter < options.refresh_iterations; ++iter) {
    const auto eps = arma_residuals(params, series);
    params = solve_arma(series, p, q, eps, options);
  }
  return params;
}

double sentiment_arma_predict(const SentimentArmaParams& params, std::span<const double> price_history,
                              std::span<const double> sent_history, const ResidualState& residuals) {
  const std::size_t k = params.sent_coeffs.size();
  if (sent_history.size() < k) {
    throw InsufficientHistory("sentiment history holds " + std::to_string(sent_history.size()) +
                              " values, need " + std::to_string(k));
  }
  const double price_term = arma_predict(params.price_arma, price_history, residuals);
  double sent_term = 0.0;
  for (std::size_t i = 1; i <= k; ++i) sent_term += params.sent_coeffs[i - 1] * sent_history[sent_history.size() - i];
  return params.alpha * price_term + params.lambda_s * sent_term + params.c;
}

SentimentArmaParams sentiment_arma_fit(std::span<const double> series, std::span<const double> sentiment,
                                       std::size_t p, std::size_t q, const FitOptions& options) {
  if (sentiment.size() != series.size()) {
    throw Error("sentiment and price series differ in length");
  }
  check_finite(sentiment, "sentiment");
  SentimentArmaParams out;
  out.price_arma = arma_fit(series, p, q, options);

  const auto eps = arma_residuals(out.price_arma, series);
  const bool flat_sentiment =
      p == 0 || std::all_of(sentiment.begin(), sentiment.end(), [&](double s) { return s == sentiment.front(); });
  const std::size_t k = flat_sentiment ? 0 : p;

  const std::size_t n = series.size();
  const auto rows = static_cast<Eigen::Index>(n - p);
  Eigen::MatrixXd design(rows, static_cast<Eigen::Index>(2 + k));
  Eigen::VectorXd target(rows);
  ResidualState state(q);
  for (std::size_t t = 0; t < p; ++t) state.push(0.0);
  for (std::size_t t = p; t < n; ++t) {
    const auto r = static_cast<Eigen::Index>(t - p);
    design(r, 0) = 1.0;
    design(r, 1) = arma_predict(out.price_arma, series.subspan(0, t), state);
    for (std::size_t i = 1; i <= k; ++i) design(r, static_cast<Eigen::Index>(1 + i)) = sentiment[t - i];
    target(r) = series[t];
    state.push(eps[t]);
  }
  const Eigen::VectorXd beta = solve_least_squares(design, target, options);
  out.c = beta(0);
  out.alpha = beta(1);
  out.sent_coeffs.assign(p, 0.0);
  if (k > 0) {
    const Eigen::VectorXd weights = beta.tail(static_cast<Eigen::Index>(k));
    const double norm = weights.norm();
    out.lambda_s = norm;
    if (norm > 0.0) {
      for (std::size_t i = 0; i < k; ++i) out.sent_coeffs[i] = weights(static_cast<Eigen::Index>(i)) / norm;
    }
  } else {
    out.lambda_s = 0.0;
  }
  return out;
}

}  // namespace newsflow::baseline
