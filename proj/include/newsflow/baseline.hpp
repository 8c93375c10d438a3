#pragma once

#include <span>
#include <vector>

#include "newsflow/common.hpp"

namespace newsflow::baseline {

// X_t = mu + sum_i phi_i X_{t-i} - sum_j psi_j eps_{t-j}
struct ArmaParams {
  double mu = 0.0;
  std::vector<double> phi;
  std::vector<double> psi;

  std::size_t p() const { return phi.size(); }
  std::size_t q() const { return psi.size(); }
};

// alpha * X^A_t + lambda_s * sum_k sent_coeffs_k S_{t-k} + c
struct SentimentArmaParams {
  double alpha = 1.0;
  double lambda_s = 0.0;
  double c = 0.0;
  ArmaParams price_arma;
  std::vector<double> sent_coeffs;
};

/// Last q one-step residuals, most recent first. Starts at zero.
class ResidualState {
 public:
  explicit ResidualState(std::size_t q = 0) : eps_(q, 0.0) {}

  std::size_t size() const { return eps_.size(); }
  // eps_{t-j} for j = 1..q
  double lag(std::size_t j) const { return eps_.at(j - 1); }
  void push(double residual);
  std::span<const double> values() const { return eps_; }

 private:
  std::vector<double> eps_;
};

class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

struct FitOptions {
  bool ridge = false;
  double ridge_epsilon = 1e-8;
  int refresh_iterations = 50;
};

// `history` is chronological; its last element is X_{t-1}.
double arma_predict(const ArmaParams& params, std::span<const double> history, const ResidualState& residuals);

/// Conditional least squares with zero-seeded residuals. For q > 0 the
/// residual columns are refreshed `refresh_iterations` times.
ArmaParams arma_fit(std::span<const double> series, std::size_t p, std::size_t q, const FitOptions& options = {});

/// One-step residuals of `params` over `series` (zero before index p).
std::vector<double> arma_residuals(const ArmaParams& params, std::span<const double> series);

double sentiment_arma_predict(const SentimentArmaParams& params, std::span<const double> price_history,
                              std::span<const double> sent_history, const ResidualState& residuals);

/// Fits the price ARMA, then regresses the series on [1, X^A_t, S_{t-1..t-p}]
/// for c, alpha and the sentiment weights. lambda_s carries the norm of the
/// sentiment weights and sent_coeffs is their unit-norm direction.
SentimentArmaParams sentiment_arma_fit(std::span<const double> series, std::span<const double> sentiment,
                                       std::size_t p, std::size_t q, const FitOptions& options = {});

}  // namespace newsflow::baseline
