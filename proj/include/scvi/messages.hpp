#pragma once

// Forward-backward over a K-state chain with a dedicated start state.
//
// Transition weights are (K+1) x K: row 0 holds the start distribution and
// row k+1 the transitions out of state k. The start state is never entered
// again, and no termination probability is modeled.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scvi/matrix.hpp"

namespace scvi {

using Token = std::uint32_t;
using Sequence = std::vector<Token>;

/// Point parameters of the per-sequence variational HMM.
struct SurrogateParams {
  Matrix trans;  // (K+1) x K
  Matrix emit;   // K x V

  [[nodiscard]] std::size_t states() const noexcept { return trans.cols(); }
  [[nodiscard]] std::size_t vocab() const noexcept { return emit.cols(); }

  /// Checks shapes, strict positivity and row sums within tol. Throws
  /// std::invalid_argument on failure.
  void validate(double tol = 1e-10) const;
};

/// Exact marginals of one sequence under a surrogate chain.
struct SequencePosterior {
  Matrix unary;                  // T x K, q(z_t = k)
  std::vector<double> pairwise;  // T x (K+1) x K, q(z_{t-1} = k, z_t = k')
  double loglik = 0.0;

  [[nodiscard]] std::size_t length() const noexcept { return unary.rows(); }
  [[nodiscard]] std::size_t states() const noexcept { return unary.cols(); }
  /// (K+1) x K slice for position t (0-based); row 0 is the start state.
  [[nodiscard]] std::span<const double> pair_slice(std::size_t t) const noexcept;
  [[nodiscard]] double pair(std::size_t t, std::size_t from, std::size_t to) const noexcept;
};

/// Expected transition counts ((K+1) x K) and emission counts (K x V).
struct LocalStats {
  Matrix trans_counts;
  Matrix emit_counts;
};

/// Chain weights laid out for the message recursions. Rows need not be
/// normalized; the scaled recursion then reports the log of the total path
/// weight as the log likelihood.
class ChainWeights {
 public:
  ChainWeights(Matrix trans, const Matrix& emit);
  explicit ChainWeights(const SurrogateParams& params) : ChainWeights(params.trans, params.emit) {}

  [[nodiscard]] std::size_t states() const noexcept { return trans_.cols(); }
  [[nodiscard]] std::size_t vocab() const noexcept { return emit_by_token_.rows(); }
  [[nodiscard]] std::span<const double> trans_row(std::size_t r) const noexcept {
    return trans_.row(r);
  }
  /// Emission weight of token w under every state.
  [[nodiscard]] std::span<const double> emission(Token w) const noexcept {
    return emit_by_token_.row(w);
  }

 private:
  Matrix trans_;
  Matrix emit_by_token_;  // V x K
};

/// Receives each pairwise slice during a fused pass (HDP table statistics).
class PairwiseObserver {
 public:
  virtual ~PairwiseObserver() = default;
  virtual void begin_sequence(std::size_t length) = 0;
  /// slice is (K+1) x K for position t; t = 0 is the transition out of the start state.
  virtual void observe(std::size_t t, std::span<const double> slice) = 0;
  virtual void end_sequence() = 0;
};

/// Token-major accumulator of expected counts over many sequences.
struct CountAccumulator {
  Matrix trans_counts;          // (K+1) x K
  Matrix emit_counts_by_token;  // V x K
  std::vector<std::uint8_t> touched;
  std::vector<Token> touched_tokens;
  double tokens = 0.0;
  std::size_t sequences = 0;

  CountAccumulator(std::size_t states, std::size_t vocab);
  void clear();
  /// this += other, visiting other's touched tokens in first-touch order.
  void merge(const CountAccumulator& other);
};

class MessageWorkspace {
 public:
  void reserve(std::size_t length, std::size_t states);

 private:
  friend double accumulate_sequence(const ChainWeights&, std::span<const Token>,
                                    CountAccumulator&, MessageWorkspace&, PairwiseObserver*);
  friend double forward_loglik(const ChainWeights&, std::span<const Token>, MessageWorkspace&);
  friend SequencePosterior forward_backward(const ChainWeights&, std::span<const Token>);

  std::vector<double> alpha;   // T x K, normalized per step
  std::vector<double> scales;  // T
  std::vector<double> beta;
  std::vector<double> beta_prev;
  std::vector<double> weighted;
  std::vector<double> slice;
};

/// Full posterior of one sequence. Throws std::invalid_argument on an empty
/// sequence and std::out_of_range on a token outside the vocabulary.
SequencePosterior forward_backward(const ChainWeights& weights, std::span<const Token> seq);
SequencePosterior forward_backward(const SurrogateParams& params, std::span<const Token> seq);

/// Sums the posterior into localC ((K+1) x K) and localT (K x V).
LocalStats local_stats(const SequencePosterior& post, std::span<const Token> seq,
                       std::size_t vocab);

/// Fused forward-backward that adds expected counts straight into acc without
/// materializing the posterior. Returns the sequence log likelihood.
double accumulate_sequence(const ChainWeights& weights, std::span<const Token> seq,
                           CountAccumulator& acc, MessageWorkspace& ws,
                           PairwiseObserver* observer = nullptr);

/// Forward recursion only.
double forward_loglik(const ChainWeights& weights, std::span<const Token> seq,
                      MessageWorkspace& ws);

}  // namespace scvi
