#pragma once

// Exponential-family emission models with conjugate priors.
//
// A family supplies the sufficient statistic t(w) of an observation and the
// surrogate emission row phi_hat[k, .] computed from the prior
// hyperparameters plus the expected statistics of state k. Only the
// categorical/Dirichlet family is provided. A Gaussian family would add a
// dense t(w) = (w, w^2), keep lambda2 as its pseudo-count, and evaluate
// its own log normalizer in surrogate_row.

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "scvi/matrix.hpp"

namespace scvi {

/// Conjugate prior hyperparameters (lambda1, lambda2).
///
/// For the categorical family lambda1 holds the Dirichlet pseudo-counts, one
/// per vocabulary entry. lambda2 is redundant there (the Dirichlet total is
/// the sum of lambda1) and is stored but ignored.
struct EmissionPrior {
  std::vector<double> lambda1;
  double lambda2 = 0.0;

  static EmissionPrior symmetric_dirichlet(std::size_t vocab_size, double pseudo_count);
  [[nodiscard]] std::size_t dim() const noexcept { return lambda1.size(); }
};

/// Expected emission sufficient statistics per state: E[t_k] and E[C_.k].
struct EmissionStats {
  Matrix expected_t;                  // K x V
  std::vector<double> expected_count; // K

  EmissionStats() = default;
  EmissionStats(std::size_t states, std::size_t vocab)
      : expected_t(states, vocab), expected_count(states, 0.0) {}

  [[nodiscard]] std::size_t states() const noexcept { return expected_t.rows(); }
  [[nodiscard]] std::size_t vocab() const noexcept { return expected_t.cols(); }

  /// Recomputes expected_count from the rows of expected_t.
  void refresh_counts();
  /// Throws std::invalid_argument if any entry is negative or non-finite.
  void validate() const;

  friend bool operator==(const EmissionStats&, const EmissionStats&) = default;
};

struct SparseEntry {
  std::size_t index;
  double value;
};

template <class F>
concept EmissionFamily = requires(std::size_t w, std::size_t v, const EmissionPrior& prior,
                                  const EmissionStats& stats, std::span<double> out) {
  { F::sufficient_stat(w, v) } -> std::convertible_to<std::vector<SparseEntry>>;
  { F::surrogate_row(prior, stats, w, out) } -> std::same_as<void>;
};

struct CategoricalFamily {
  /// Indicator vector e_w; throws std::out_of_range if w >= vocab_size.
  static std::vector<SparseEntry> sufficient_stat(std::size_t w, std::size_t vocab_size);

  /// phi_hat[k, w] = (lambda1[w] + E_t[k, w]) / sum_w' (lambda1[w'] + E_t[k, w']).
  static void surrogate_row(const EmissionPrior& prior, const EmissionStats& stats,
                            std::size_t k, std::span<double> out);
};

static_assert(EmissionFamily<CategoricalFamily>);

inline std::vector<SparseEntry> sufficient_stat(std::size_t w, std::size_t vocab_size) {
  return CategoricalFamily::sufficient_stat(w, vocab_size);
}

std::vector<double> surrogate_emission_row(const EmissionPrior& prior,
                                           const EmissionStats& stats, std::size_t k);

/// All K surrogate rows as a K x V matrix.
Matrix surrogate_emissions(const EmissionPrior& prior, const EmissionStats& stats);

}  // namespace scvi
