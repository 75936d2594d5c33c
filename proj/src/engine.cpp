#include "scvi/engine.hpp"

#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "scvi/simd/kernels.hpp"

namespace scvi {

double GlobalStats::transition_mass() const {
  return simd::kernels().sum(trans.data(), trans.size());
}

double GlobalStats::emission_mass() const {
  return simd::kernels().sum(emission.expected_t.data(), emission.expected_t.size());
}

void GlobalStats::validate() const {
  auto check = [](std::span<const double> xs, const char* what) {
    for (double x : xs) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw NumericalError(std::string("global statistics: negative or non-finite ") + what);
      }
    }
  };
  check(trans.flat(), "transition count");
  check(emission.expected_t.flat(), "emission statistic");
  check(emission.expected_count, "emission count");
}

void Schedule::validate() const {
  if (!(kappa >= 0.5 && kappa <= 1.0)) {
    throw std::invalid_argument("schedule: kappa must lie in [0.5, 1], got " + std::to_string(kappa));
  }
  if (minibatch == 0) throw std::invalid_argument("schedule: minibatch size must be >= 1");
  if (large_batch < minibatch) {
    throw std::invalid_argument("schedule: large batch must be >= minibatch size");
  }
}

double step_size(double kappa, std::uint64_t n) {
  return std::pow(1.0 + static_cast<double>(n), -kappa);
}

std::vector<double> transition_prior_term(const ModelMode& mode, std::size_t states) {
  if (const auto* finite = std::get_if<FiniteHmm>(&mode)) {
    if (!(finite->prior_count > 0.0)) throw std::invalid_argument("finite HMM prior count must be positive");
    return std::vector<double>(states, finite->prior_count);
  }
  const auto& hdp = std::get<HdpHmm>(mode).posterior;
  if (hdp.truncation() != states) throw std::invalid_argument("HDP truncation does not match state count");
  return hdp.geo_alpha_pi;
}

GlobalStats initialize_stats(std::size_t states, std::size_t vocab, double token_mass,
                             std::uint64_t seed) {
  if (states == 0 || vocab == 0) throw std::invalid_argument("initialize_stats: K and V must be >= 1");
  if (!(token_mass > 0.0)) throw std::invalid_argument("initialize_stats: token mass must be positive");
  GlobalStats stats(states, vocab);
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> draw(1.0);
  auto fill_scaled = [&](std::span<double> xs) {
    double total = 0.0;
    for (double& x : xs) {
      do x = draw(rng); while (!(x > 0.0));
      total += x;
    }
    const double s = token_mass / total;
    for (double& x : xs) x *= s;
  };
  fill_scaled(stats.trans.flat());
  fill_scaled(stats.emission.expected_t.flat());
  stats.emission.refresh_counts();
  return stats;
}

SurrogateParams build_surrogate(const GlobalStats& stats, const ModelMode& mode,
                                const EmissionPrior& prior) {
  const std::size_t K = stats.states();
  const auto& kt = simd::kernels();
  const std::vector<double> prior_term = transition_prior_term(mode, K);
  SurrogateParams params{Matrix(K + 1, K), surrogate_emissions(prior, stats.emission)};
  for (std::size_t r = 0; r <= K; ++r) {
    auto row = params.trans.row(r);
    for (std::size_t c = 0; c < K; ++c) row[c] = prior_term[c] + stats.trans(r, c);
    kt.scale(1.0 / kt.sum(row.data(), K), row.data(), K);
  }
  return params;
}

BatchRunner::BatchRunner(std::size_t states, std::size_t vocab, std::size_t threads) {
  if (threads == 0) threads = 1;
  workers_.reserve(threads);
  for (std::size_t i = 0; i < threads; ++i) {
    workers_.push_back(Worker{CountAccumulator(states, vocab), MessageWorkspace{}, TableEvidence(states)});
  }
}

const CountAccumulator& BatchRunner::run(const ChainWeights& weights,
                                         std::span<const Sequence> corpus,
                                         std::span<const std::size_t> batch,
                                         TableEvidence* evidence) {
  if (batch.empty()) throw std::invalid_argument("minibatch is empty");
  const std::size_t chunks = std::min(workers_.size(), batch.size());
  std::vector<std::exception_ptr> errors(chunks);

  auto work = [&](std::size_t w) {
    try {
      Worker& worker = workers_[w];
      worker.counts.clear();
      worker.evidence.clear();
      TableEvidenceObserver observer(worker.evidence);
      PairwiseObserver* obs = evidence != nullptr ? &observer : nullptr;
      const std::size_t begin = batch.size() * w / chunks;
      const std::size_t end = batch.size() * (w + 1) / chunks;
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t n = batch[i];
        if (n >= corpus.size()) throw std::out_of_range("minibatch index outside corpus");
        const Sequence& seq = corpus[n];
        if (seq.empty()) throw std::invalid_argument("sequence " + std::to_string(n) + " is empty");
        const double ll = accumulate_sequence(weights, seq, worker.counts, worker.workspace, obs);
        if (!std::isfinite(ll)) {
          throw NumericalError("non-finite log likelihood for sequence " + std::to_string(n));
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (chunks == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(chunks - 1);
    for (std::size_t w = 1; w < chunks; ++w) pool.emplace_back(work, w);
    work(0);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t stride = 1; stride < chunks; stride *= 2) {
    for (std::size_t w = 0; w + stride < chunks; w += 2 * stride) {
      workers_[w].counts.merge(workers_[w + stride].counts);
      if (evidence != nullptr) workers_[w].evidence.merge(workers_[w + stride].evidence);
    }
  }
  if (evidence != nullptr) evidence->merge(workers_[0].evidence);

  const CountAccumulator& total = workers_[0].counts;
  const double mass = simd::kernels().sum(total.trans_counts.data(), total.trans_counts.size());
  if (!std::isfinite(mass)) throw NumericalError("non-finite expected counts in minibatch");
  return total;
}

void blend_counts(GlobalStats& stats, const CountAccumulator& counts, double rho, double scale) {
  const auto& kt = simd::kernels();
  const std::size_t K = stats.states();
  const double keep = 1.0 - rho;
  const double gain = rho * scale;
  kt.blend(keep, gain, counts.trans_counts.data(), stats.trans.data(), stats.trans.size());

  auto& et = stats.emission.expected_t;
  kt.scale(keep, et.data(), et.size());
  std::vector<double> state_mass(K, 0.0);
  for (Token w : counts.touched_tokens) {
    const auto local = counts.emit_counts_by_token.row(w);
    kt.axpy(1.0, local.data(), state_mass.data(), K);
    for (std::size_t k = 0; k < K; ++k) et(k, w) += gain * local[k];
  }
  kt.blend(keep, gain, state_mass.data(), stats.emission.expected_count.data(), K);
}

MinibatchReport process_minibatch(GlobalStats& stats, std::span<const Sequence> corpus,
                                  std::span<const std::size_t> batch, Schedule& sched,
                                  const ModelMode& mode, const EmissionPrior& prior,
                                  BatchRunner& runner, TableEvidence* evidence) {
  if (batch.empty()) throw std::invalid_argument("process_minibatch: empty batch");
  const ChainWeights weights(build_surrogate(stats, mode, prior));
  const CountAccumulator& counts = runner.run(weights, corpus, batch, evidence);

  MinibatchReport report;
  report.rho = step_size(sched);
  report.sequences = batch.size();
  const double scale = static_cast<double>(corpus.size()) / static_cast<double>(batch.size());
  blend_counts(stats, counts, report.rho, scale);
  sched.step += 1;
  stats.validate();
  return report;
}

double predictive_log_likelihood(const ChainWeights& weights, std::span<const Sequence> heldout) {
  if (heldout.empty()) throw std::invalid_argument("predictive_log_likelihood: empty held-out set");
  MessageWorkspace ws;
  double total = 0.0;
  double tokens = 0.0;
  for (const auto& seq : heldout) {
    total += forward_loglik(weights, seq, ws);
    tokens += static_cast<double>(seq.size());
  }
  return total / tokens;
}

}  // namespace scvi
