#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "newsflow/baseline.hpp"

using namespace newsflow;
using namespace newsflow::baseline;

namespace {

std::vector<double> simulate_ar(const std::vector<double>& phi, double mu, double sigma, std::size_t n,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e(0.0, sigma);
  std::vector<double> x(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double v = mu + e(rng);
    for (std::size_t i = 1; i <= phi.size() && i <= t; ++i) v += phi[i - 1] * x[t - i];
    x[t] = v;
  }
  return x;
}

// Least squares through the normal equations, independent of the library's QR path.
Eigen::VectorXd normal_equations(const std::vector<double>& x, std::size_t p) {
  const std::size_t rows = x.size() - p;
  Eigen::MatrixXd a(rows, p + 1);
  Eigen::VectorXd b(rows);
  for (std::size_t t = p; t < x.size(); ++t) {
    a(t - p, 0) = 1.0;
    for (std::size_t i = 1; i <= p; ++i) a(t - p, i) = x[t - i];
    b(t - p) = x[t];
  }
  return (a.transpose() * a).llt().solve(a.transpose() * b);
}

}  // namespace

TEST_CASE("residual state keeps the newest value first") {
  ResidualState s(3);
  s.push(1.0);
  s.push(2.0);
  CHECK(s.lag(1) == 2.0);
  CHECK(s.lag(2) == 1.0);
  CHECK(s.lag(3) == 0.0);
  s.push(3.0);
  s.push(4.0);
  CHECK(s.values()[0] == 4.0);
  CHECK(s.values()[2] == 2.0);
  ResidualState empty;
  empty.push(1.0);
  CHECK(empty.size() == 0);
}

TEST_CASE("arma_predict evaluates the difference equation") {
  ArmaParams p{1.0, {0.5, 0.2}, {0.3}};
  ResidualState eps(1);
  eps.push(0.4);
  const std::vector<double> history = {9.0, 2.0, 4.0};
  CHECK(arma_predict(p, history, eps) == doctest::Approx(1.0 + 0.5 * 4.0 + 0.2 * 2.0 - 0.3 * 0.4));
  CHECK_THROWS_AS(arma_predict(p, std::vector<double>{1.0}, eps), InsufficientHistory);
  CHECK_THROWS_AS(arma_predict(p, history, ResidualState(0)), InsufficientHistory);
}

TEST_CASE("AR fit equals an independent least-squares solution") {
  const auto x = simulate_ar({0.6, -0.25}, 2.0, 1.0, 400, 17);
  const auto fit = arma_fit(x, 2, 0);
  const auto ref = normal_equations(x, 2);
  CHECK(fit.mu == doctest::Approx(ref(0)).epsilon(1e-9));
  CHECK(fit.phi[0] == doctest::Approx(ref(1)).epsilon(1e-9));
  CHECK(fit.phi[1] == doctest::Approx(ref(2)).epsilon(1e-9));
  CHECK(fit.psi.empty());
}

TEST_CASE("AR(2) coefficients are recovered from a long simulation") {
  const auto x = simulate_ar({0.6, -0.25}, 2.0, 1.0, 20000, 21);
  const auto fit = arma_fit(x, 2, 0);
  CHECK(fit.phi[0] == doctest::Approx(0.6).epsilon(0.05));
  CHECK(fit.phi[1] == doctest::Approx(-0.25).epsilon(0.05));
  CHECK(fit.mu == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("ARMA(1,1) refits recover both coefficients") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> e(0.0, 1.0);
  const double phi = 0.7, psi = 0.4;
  std::vector<double> x(20000, 0.0);
  double prev_eps = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) {
    const double eps = e(rng);
    x[t] = phi * x[t - 1] - psi * prev_eps + eps;
    prev_eps = eps;
  }
  const auto fit = arma_fit(x, 1, 1);
  CHECK(fit.phi[0] == doctest::Approx(phi).epsilon(0.05));
  CHECK(fit.psi[0] == doctest::Approx(psi).epsilon(0.05));
}

TEST_CASE("residuals are one-step errors of the fitted model") {
  const auto x = simulate_ar({0.5}, 0.0, 1.0, 50, 2);
  const auto fit = arma_fit(x, 1, 0);
  const auto eps = arma_residuals(fit, x);
  REQUIRE(eps.size() == x.size());
  CHECK(eps[0] == 0.0);
  for (std::size_t t = 1; t < x.size(); ++t) {
    CHECK(eps[t] == doctest::Approx(x[t] - fit.mu - fit.phi[0] * x[t - 1]).epsilon(1e-12));
  }
}

TEST_CASE("degenerate inputs raise typed errors") {
  CHECK_THROWS_AS(arma_fit(std::vector<double>{1, 2, 3}, 2, 0), InsufficientHistory);
  const std::vector<double> flat(30, 5.0);
  CHECK_THROWS_AS(arma_fit(flat, 1, 0), SingularSystem);
  FitOptions ridge;
  ridge.ridge = true;
  const auto fit = arma_fit(flat, 1, 0, ridge);
  CHECK(std::isfinite(fit.mu));
  CHECK(fit.mu + fit.phi[0] * 5.0 == doctest::Approx(5.0).epsilon(1e-6));
  std::vector<double> bad(30, 1.0);
  bad[7] = std::nan("");
  CHECK_THROWS_AS(arma_fit(bad, 1, 0), Error);
}

TEST_CASE("flat sentiment leaves only the price model") {
  const auto x = simulate_ar({0.8}, 10.0, 1.0, 200, 8);
  const std::vector<double> s(x.size(), 0.3);
  const auto fit = sentiment_arma_fit(x, s, 2, 0);
  CHECK(fit.lambda_s == 0.0);
  CHECK(fit.sent_coeffs == std::vector<double>{0.0, 0.0});
  CHECK(fit.alpha == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fit.c == doctest::Approx(0.0).scale(50.0).epsilon(1e-6));
}

TEST_CASE("sentiment term picks up a lagged news effect") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> e(0.0, 0.2), news(0.0, 1.0);
  const std::size_t n = 3000;
  std::vector<double> x(n, 0.0), s(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) s[t] = news(rng);
  for (std::size_t t = 1; t < n; ++t) x[t] = 0.5 * x[t - 1] + 1.5 * s[t - 1] + e(rng);
  const auto fit = sentiment_arma_fit(x, s, 1, 0);
  REQUIRE(fit.sent_coeffs.size() == 1);
  CHECK(fit.lambda_s * fit.sent_coeffs[0] == doctest::Approx(1.5).epsilon(0.05));
  CHECK(std::abs(fit.sent_coeffs[0]) == doctest::Approx(1.0));

  ResidualState none(0);
  double sq_news = 0.0, sq_plain = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    const double a = sentiment_arma_predict(fit, std::span(x).first(t), std::span(s).first(t), none) - x[t];
    const double b = arma_predict(fit.price_arma, std::span(x).first(t), none) - x[t];
    sq_news += a * a;
    sq_plain += b * b;
  }
  CHECK(sq_news < 0.1 * sq_plain);
  CHECK_THROWS_AS(sentiment_arma_fit(x, std::vector<double>(5, 0.0), 1, 0), Error);
}
