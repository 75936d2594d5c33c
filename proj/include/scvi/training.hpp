#pragma once

// Training driver: an outer loop over large batches (HDP posterior updates),
// a middle loop over minibatches (global count updates) and an inner loop
// over the sequences of each minibatch. The finite HMM and SVI drop the
// outer loop.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "scvi/corpus.hpp"
#include "scvi/metrics.hpp"
#include "scvi/model.hpp"

namespace scvi {

struct TrainConfig {
  Algorithm algorithm = Algorithm::ScviHmm;
  std::size_t states = 45;
  double kappa = 0.5;
  std::size_t minibatch = 1000;
  std::size_t large_batch = 10000;
  std::size_t passes = 10;
  double time_budget_seconds = 0.0;  // 0 = no budget
  double trans_prior = 0.1;
  double emit_prior = 0.1;
  HdpPriors hdp_priors;
  std::uint64_t seed = 1;
  std::size_t eval_every_steps = 0;    // 0 = only at pass ends
  double eval_every_seconds = 0.0;     // 0 = disabled
  std::size_t threads = 1;
  SamplingMode sampling = SamplingMode::Shuffle;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Fresh model: exponential-initialized counts scaled to the corpus token
/// mass, HDP posterior at its priors with G[alpha pi] pinned.
Model initialize_model(const TrainConfig& config, const Corpus& train);

using MetricSink = std::function<void(const MetricRecord&)>;

/// Runs training from initialize_model. Metrics for the held-out set are
/// reported at step 0, every eval_every_steps steps, every
/// eval_every_seconds of wall-clock and at the end of every pass; none are
/// reported when heldout is empty. Throws NumericalError with the step
/// number when a non-finite value appears.
Model train(const Corpus& train, std::span<const Sequence> heldout, const TrainConfig& config,
            const MetricSink& sink = {});

}  // namespace scvi
