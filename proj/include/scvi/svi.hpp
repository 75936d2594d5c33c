#pragma once

// Uncollapsed stochastic variational inference for finite HMMs with
// Dirichlet posteriors on every transition and emission row.

#include <cstddef>
#include <span>

#include "scvi/engine.hpp"
#include "scvi/matrix.hpp"
#include "scvi/messages.hpp"

namespace scvi {

struct DirichletRows {
  Matrix trans;  // (K+1) x K
  Matrix emit;   // K x V

  [[nodiscard]] std::size_t states() const noexcept { return trans.cols(); }
  [[nodiscard]] std::size_t vocab() const noexcept { return emit.cols(); }
  /// Throws std::invalid_argument unless every entry is positive and finite.
  void validate() const;

  friend bool operator==(const DirichletRows&, const DirichletRows&) = default;
};

struct SviPriors {
  double trans = 0.1;
  double emit = 0.1;
};

/// Prior plus the given expected counts.
DirichletRows svi_initial(const GlobalStats& init, const SviPriors& priors);

/// Unnormalized mean-field message weights exp(psi(lambda) - psi(sum lambda)).
ChainWeights svi_message_weights(const DirichletRows& rows);

/// The geometric weights with each row renormalized to sum to one.
SurrogateParams svi_surrogate(const DirichletRows& rows);

/// Posterior-mean parameters, used for predictive evaluation.
SurrogateParams svi_mean_params(const DirichletRows& rows);

/// rows <- (1 - rho) rows + rho (prior + scale * counts).
void svi_blend(DirichletRows& rows, const CountAccumulator& counts, double rho, double scale,
               const SviPriors& priors);

/// One SVI minibatch step with rho = step_size(sched) and scale N / |batch|.
MinibatchReport svi_step(DirichletRows& rows, std::span<const Sequence> corpus,
                         std::span<const std::size_t> batch, Schedule& sched,
                         const SviPriors& priors, BatchRunner& runner);

}  // namespace scvi
