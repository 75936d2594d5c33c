#include "scvi/core_math.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace scvi {

bool BetaParams::valid() const noexcept {
  return std::isfinite(u) && std::isfinite(v) && u > 0.0 && v > 0.0;
}

bool GammaParams::valid() const noexcept {
  return std::isfinite(a) && std::isfinite(b) && a > 0.0 && b > 0.0;
}

double digamma(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error("digamma: argument must be positive and finite, got " +
                            std::to_string(x));
  }
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  // Bernoulli-number coefficients B_2n / (2n) for n = 1..5.
  const double r = 1.0 / (x * x);
  const double tail =
      r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r * (1.0 / 132)))));
  return shift + std::log(x) - 0.5 / x - tail;
}

std::pair<double, double> beta_expect_logs(const BetaParams& p) {
  if (!p.valid()) throw std::domain_error("beta_expect_logs: invalid Beta parameters");
  const double total = digamma(p.u + p.v);
  return {digamma(p.u) - total, digamma(p.v) - total};
}

double gamma_expect(const GammaParams& p) {
  if (!p.valid()) throw std::domain_error("gamma_expect: invalid Gamma parameters");
  return p.a / p.b;
}

double gamma_expect_log(const GammaParams& p) {
  if (!p.valid()) throw std::domain_error("gamma_expect_log: invalid Gamma parameters");
  return digamma(p.a) - std::log(p.b);
}

double gamma_geo_expect(const GammaParams& p) {
  if (!p.valid()) throw std::domain_error("gamma_geo_expect: invalid Gamma parameters");
  return std::exp(digamma(p.a)) / p.b;
}

}  // namespace scvi
