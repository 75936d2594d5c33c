#pragma once

// Special functions and the Beta/Gamma expectations used by the collapsed
// and uncollapsed updates.

#include <utility>

namespace scvi {

/// Variational Beta(u, v) with density proportional to x^(u-1) (1-x)^(v-1).
struct BetaParams {
  double u = 1.0;
  double v = 1.0;

  [[nodiscard]] bool valid() const noexcept;
  friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

/// Gamma(a, b) in shape/rate form, density proportional to x^(a-1) e^(-b x).
struct GammaParams {
  double a = 1.0;
  double b = 1.0;

  [[nodiscard]] bool valid() const noexcept;
  friend bool operator==(const GammaParams&, const GammaParams&) = default;
};

/// Digamma function psi(x) for x > 0.
///
/// Shifts the argument upward with psi(x) = psi(x+1) - 1/x until x >= 10,
/// then sums the asymptotic series through the x^-10 term. Throws
/// std::domain_error for non-positive or non-finite input.
double digamma(double x);

/// (E[log x], E[log(1-x)]) for x ~ Beta(u, v).
std::pair<double, double> beta_expect_logs(const BetaParams& p);

/// E[x] = a / b.
double gamma_expect(const GammaParams& p);

/// Geometric expectation exp(E[log x]) = exp(psi(a)) / b.
double gamma_geo_expect(const GammaParams& p);

/// E[log x] = psi(a) - log b; the log-space form of gamma_geo_expect.
double gamma_expect_log(const GammaParams& p);

}  // namespace scvi
