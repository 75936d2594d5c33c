#pragma once

// Stochastic collapsed variational inference for (HDP-)HMMs: the expected
// counts E[C] and E[t] are the only global state. Each minibatch runs
// forward-backward under surrogate parameters frozen from the current
// counts, then blends the rescaled minibatch counts into the globals.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "scvi/emissions.hpp"
#include "scvi/hdp.hpp"
#include "scvi/matrix.hpp"
#include "scvi/messages.hpp"

namespace scvi {

/// Raised when a minibatch produces a non-finite quantity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalStats {
  Matrix trans;            // E[C_kk'], (K+1) x K, row 0 = start transitions
  EmissionStats emission;  // E[t_k'] and E[C_.k']

  GlobalStats() = default;
  GlobalStats(std::size_t states, std::size_t vocab)
      : trans(states + 1, states), emission(states, vocab) {}

  [[nodiscard]] std::size_t states() const noexcept { return trans.cols(); }
  [[nodiscard]] std::size_t vocab() const noexcept { return emission.vocab(); }
  [[nodiscard]] double transition_mass() const;
  [[nodiscard]] double emission_mass() const;
  /// Throws NumericalError on a negative or non-finite entry.
  void validate() const;

  friend bool operator==(const GlobalStats&, const GlobalStats&) = default;
};

struct Schedule {
  double kappa = 0.5;
  std::uint64_t step = 0;      // minibatches applied
  std::uint64_t hdp_step = 0;  // HDP posterior updates applied
  std::size_t minibatch = 1000;
  std::size_t large_batch = 10000;

  /// kappa in [0.5, 1], minibatch >= 1, large_batch >= minibatch.
  void validate() const;
};

/// rho_n = (1 + n)^-kappa.
double step_size(double kappa, std::uint64_t n);
inline double step_size(const Schedule& s) { return step_size(s.kappa, s.step); }

struct FiniteHmm {
  double prior_count = 0.1;
};

struct HdpHmm {
  HdpPosterior posterior;
  HdpPriors priors;
};

using ModelMode = std::variant<FiniteHmm, HdpHmm>;

/// Per-column transition pseudo-counts: the fixed prior count, or the cached
/// G[alpha pi_k'] of the HDP posterior. Every row, including the start row,
/// uses the same vector.
std::vector<double> transition_prior_term(const ModelMode& mode, std::size_t states);

/// Exponential(1) entries rescaled so both the transition and the emission
/// totals equal token_mass.
GlobalStats initialize_stats(std::size_t states, std::size_t vocab, double token_mass,
                             std::uint64_t seed);

SurrogateParams build_surrogate(const GlobalStats& stats, const ModelMode& mode,
                                const EmissionPrior& prior);

/// Per-worker buffers for running a minibatch against frozen chain weights.
/// Sequences are split into contiguous chunks, one per worker, and chunk
/// results are merged by a fixed-shape tree, so a given thread count always
/// produces the same sums.
class BatchRunner {
 public:
  BatchRunner(std::size_t states, std::size_t vocab, std::size_t threads = 1);

  /// Runs all sequences of `batch` (indices into `corpus`). When `evidence`
  /// is non-null its HDP table evidence is accumulated too. Returns the
  /// reduced counts, valid until the next call. Throws NumericalError naming
  /// the corpus index of a sequence with non-finite likelihood.
  const CountAccumulator& run(const ChainWeights& weights, std::span<const Sequence> corpus,
                              std::span<const std::size_t> batch,
                              TableEvidence* evidence = nullptr);

  [[nodiscard]] std::size_t threads() const noexcept { return workers_.size(); }

 private:
  struct Worker {
    CountAccumulator counts;
    MessageWorkspace workspace;
    TableEvidence evidence;
  };
  std::vector<Worker> workers_;
};

/// stats <- (1 - rho) stats + rho * scale * counts.
void blend_counts(GlobalStats& stats, const CountAccumulator& counts, double rho, double scale);

struct MinibatchReport {
  double rho = 0.0;
  std::size_t sequences = 0;
};

/// One stochastic step: freeze surrogates, collect counts over the batch,
/// blend with rho = step_size(sched) and scale N / |batch|, then advance the
/// step counter. HDP table evidence is added to `evidence` when given.
MinibatchReport process_minibatch(GlobalStats& stats, std::span<const Sequence> corpus,
                                  std::span<const std::size_t> batch, Schedule& sched,
                                  const ModelMode& mode, const EmissionPrior& prior,
                                  BatchRunner& runner, TableEvidence* evidence = nullptr);

/// Sum of held-out log likelihoods divided by the held-out token count.
double predictive_log_likelihood(const ChainWeights& weights, std::span<const Sequence> heldout);

}  // namespace scvi
