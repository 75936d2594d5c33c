#include "scvi/emissions.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "scvi/simd/kernels.hpp"

namespace scvi {

EmissionPrior EmissionPrior::symmetric_dirichlet(std::size_t vocab_size, double pseudo_count) {
  if (!(pseudo_count > 0.0) || !std::isfinite(pseudo_count)) {
    throw std::invalid_argument("emission prior pseudo-count must be positive");
  }
  EmissionPrior prior;
  prior.lambda1.assign(vocab_size, pseudo_count);
  prior.lambda2 = pseudo_count * static_cast<double>(vocab_size);
  return prior;
}

void EmissionStats::refresh_counts() {
  const auto& k = simd::kernels();
  expected_count.resize(states());
  for (std::size_t s = 0; s < states(); ++s) {
    expected_count[s] = k.sum(expected_t.row(s).data(), vocab());
  }
}

void EmissionStats::validate() const {
  if (expected_count.size() != states()) {
    throw std::invalid_argument("emission stats: count vector has wrong length");
  }
  for (std::size_t s = 0; s < states(); ++s) {
    for (double x : expected_t.row(s)) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("emission stats: negative or non-finite entry in state " +
                                    std::to_string(s));
      }
    }
    if (!(expected_count[s] >= 0.0) || !std::isfinite(expected_count[s])) {
      throw std::invalid_argument("emission stats: negative or non-finite count in state " +
                                  std::to_string(s));
    }
  }
}

std::vector<SparseEntry> CategoricalFamily::sufficient_stat(std::size_t w,
                                                            std::size_t vocab_size) {
  if (w >= vocab_size) {
    throw std::out_of_range("token index " + std::to_string(w) + " outside vocabulary of size " +
                            std::to_string(vocab_size));
  }
  return {SparseEntry{w, 1.0}};
}

void CategoricalFamily::surrogate_row(const EmissionPrior& prior, const EmissionStats& stats,
                                      std::size_t k, std::span<double> out) {
  const std::size_t V = stats.vocab();
  if (k >= stats.states()) throw std::out_of_range("surrogate_row: state index out of range");
  if (prior.dim() != V || out.size() != V) {
    throw std::invalid_argument("surrogate_row: prior/vocabulary size mismatch");
  }
  const auto row = stats.expected_t.row(k);
  for (std::size_t w = 0; w < V; ++w) {
    if (!(row[w] >= 0.0)) {
      throw std::invalid_argument("surrogate_row: negative emission statistic in state " +
                                  std::to_string(k));
    }
    out[w] = prior.lambda1[w] + row[w];
  }
  // Normalizing by the realized numerator sum keeps the row exactly
  // stochastic even when expected_count drifts from the row sum by rounding.
  const auto& kt = simd::kernels();
  const double total = kt.sum(out.data(), V);
  kt.scale(1.0 / total, out.data(), V);
}

std::vector<double> surrogate_emission_row(const EmissionPrior& prior,
                                           const EmissionStats& stats, std::size_t k) {
  std::vector<double> out(stats.vocab());
  CategoricalFamily::surrogate_row(prior, stats, k, out);
  return out;
}

Matrix surrogate_emissions(const EmissionPrior& prior, const EmissionStats& stats) {
  Matrix out(stats.states(), stats.vocab());
  for (std::size_t k = 0; k < stats.states(); ++k) {
    CategoricalFamily::surrogate_row(prior, stats, k, out.row(k));
  }
  return out;
}

}  // namespace scvi
