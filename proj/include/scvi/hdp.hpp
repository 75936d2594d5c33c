#pragma once

// HDP machinery for the collapsed HDP-HMM: stick-breaking geometric
// expectations, expected Chinese-restaurant-franchise table counts for an
// N-fold replicated sequence, and the stochastic posterior updates of the
// sticks and the two concentrations.

#include <cstddef>
#include <span>
#include <vector>

#include "scvi/core_math.hpp"
#include "scvi/matrix.hpp"
#include "scvi/messages.hpp"

namespace scvi {

/// Gamma hyperpriors on the transition concentration alpha and the top-level
/// concentration gamma.
struct HdpPriors {
  GammaParams alpha{1.0, 0.1};
  GammaParams gamma{1.0, 0.1};
};

/// G[alpha pi_k'] used for every state before the first posterior update, so
/// the HDP chain starts from the same prior counts as the finite one.
inline constexpr double kInitialGeoAlphaPi = 0.1;

struct HdpPosterior {
  std::vector<BetaParams> sticks;    // q(pi~_k') = Beta(u_k', v_k')
  GammaParams alpha;                 // q(alpha)
  GammaParams gamma;                 // q(gamma)
  std::vector<double> geo_alpha_pi;  // cached G[alpha pi_k']
  bool pinned = true;                // cache holds kInitialGeoAlphaPi

  /// Sticks Beta(1, E[gamma]) and concentrations at their priors, with the
  /// cache pinned to kInitialGeoAlphaPi.
  static HdpPosterior initial(std::size_t truncation, const HdpPriors& priors);

  [[nodiscard]] std::size_t truncation() const noexcept { return sticks.size(); }
  /// Recomputes the cache from sticks and alpha and drops the pin.
  void refresh();
  /// Throws std::invalid_argument on any invalid parameter.
  void validate() const;

  friend bool operator==(const HdpPosterior&, const HdpPosterior&) = default;
};

/// G[alpha] * exp(E[log pi~_k'] + sum_{l<k'} E[log(1 - pi~_l)]).
std::vector<double> geo_alpha_pi(const HdpPosterior& post);

/// Per-sequence evidence for the table-count approximation, summed over the
/// sequences of a large batch. The expected_tables formulas use the means.
struct TableEvidence {
  Matrix counts;                   // sum_n E[C^n_kk'], (K+1) x K
  Matrix log_empty;                // sum_n sum_t log(1 - q(z_{t-1}=k, z_t=k'))
  std::vector<double> log_empty_row;  // sum_n sum_t log(1 - q(z_{t-1}=k)), K+1
  std::size_t sequences = 0;

  explicit TableEvidence(std::size_t states = 0);
  [[nodiscard]] std::size_t states() const noexcept { return counts.cols(); }
  void clear();
  void merge(const TableEvidence& other);
  /// Adds one (K+1) x K pairwise slice of the current sequence.
  void add_slice(std::span<const double> slice);
  void add_sequence(const SequencePosterior& post);
};

/// Feeds pairwise slices from the fused message pass into a TableEvidence.
class TableEvidenceObserver final : public PairwiseObserver {
 public:
  explicit TableEvidenceObserver(TableEvidence& sink) : sink_(sink) {}
  void begin_sequence(std::size_t) override {}
  void observe(std::size_t, std::span<const double> slice) override { sink_.add_slice(slice); }
  void end_sequence() override { sink_.sequences += 1; }

 private:
  TableEvidence& sink_;
};

struct TableStats {
  Matrix expected_tables;                 // E[s^(N)_kk'], (K+1) x K
  std::vector<double> expected_log_eta;   // E[log eta^(N)_k], K+1
  Matrix q_occupied;                      // q(C^(N)_kk' > 0)
  Matrix occupied_count;                  // E_+[C^(N)_kk']

  explicit TableStats(std::size_t states = 0);
};

/// Table statistics for an artificial dataset of `replicas` copies of the
/// mean sequence in `evidence`. Cells with no expected transitions get zero
/// tables.
TableStats expected_tables(const TableEvidence& evidence, double replicas,
                           const HdpPosterior& post);
TableStats expected_tables(const SequencePosterior& seq, double replicas,
                           const HdpPosterior& post);

/// Weighted-average update of sticks, alpha and gamma with step rho in (0, 1].
/// The gamma rate uses the sticks after their own update; the cache is
/// refreshed.
HdpPosterior update_hdp(const HdpPosterior& post, const TableStats& tables, double rho,
                        const HdpPriors& priors);

}  // namespace scvi
