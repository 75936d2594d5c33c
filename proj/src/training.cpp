#include "scvi/training.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace scvi {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (states == 0) fail("states: must be >= 1");
  if (!(kappa >= 0.5 && kappa <= 1.0)) fail("kappa: must lie in [0.5, 1]");
  if (minibatch == 0) fail("minibatch: must be >= 1");
  if (large_batch < minibatch) fail("large_batch: must be >= minibatch");
  if (!(time_budget_seconds >= 0.0)) fail("time_budget: must be >= 0");
  if (!(trans_prior > 0.0)) fail("trans_prior: must be positive");
  if (!(emit_prior > 0.0)) fail("emit_prior: must be positive");
  if (!hdp_priors.alpha.valid()) fail("alpha prior: shape and rate must be positive");
  if (!hdp_priors.gamma.valid()) fail("gamma prior: shape and rate must be positive");
  if (!(eval_every_seconds >= 0.0)) fail("eval_every_seconds: must be >= 0");
  if (threads == 0) fail("threads: must be >= 1");
}

namespace {

constexpr std::uint64_t kSamplerSeedOffset = 0x5851f42d4c957f2dULL;

}  // namespace

Model initialize_model(const TrainConfig& config, const Corpus& train) {
  config.validate();
  if (train.size() == 0) throw std::invalid_argument("training corpus is empty");
  Model model;
  model.algorithm = config.algorithm;
  model.corpus_size = train.size();
  model.trans_prior = config.trans_prior;
  model.emit_prior = config.emit_prior;
  model.hdp_priors = config.hdp_priors;
  model.schedule.kappa = config.kappa;
  model.schedule.minibatch = config.minibatch;
  model.schedule.large_batch = config.large_batch;
  model.vocab = train.vocab;

  const std::size_t tokens = train.token_count > 0 ? train.token_count : train.size();
  GlobalStats init = initialize_stats(config.states, train.vocab.size(),
                                      static_cast<double>(tokens), config.seed);
  switch (config.algorithm) {
    case Algorithm::ScviHmm:
      model.state = ScviState{std::move(init), FiniteHmm{config.trans_prior}};
      break;
    case Algorithm::ScviHdpHmm:
      model.state = ScviState{std::move(init),
                              HdpHmm{HdpPosterior::initial(config.states, config.hdp_priors),
                                     config.hdp_priors}};
      break;
    case Algorithm::SviHmm:
      model.state = SviState{svi_initial(init, SviPriors{config.trans_prior, config.emit_prior})};
      break;
  }
  return model;
}

Model train(const Corpus& train, std::span<const Sequence> heldout, const TrainConfig& config,
            const MetricSink& sink) {
  Model model = initialize_model(config, train);
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  std::size_t pass = 0;
  std::optional<std::uint64_t> last_eval_step;
  double last_eval_time = 0.0;
  auto evaluate = [&] {
    if (heldout.empty() || !sink) return;
    MetricRecord r;
    r.step = model.schedule.step;
    r.pass = pass;
    r.seconds = elapsed();
    r.heldout_ll = predictive_log_likelihood(model, heldout);
    r.k_effective = effective_states(model);
    if (!std::isfinite(r.heldout_ll)) {
      throw NumericalError("non-finite held-out log likelihood at step " + std::to_string(r.step));
    }
    last_eval_step = r.step;
    last_eval_time = r.seconds;
    sink(r);
  };
  evaluate();

  const bool budgeted = config.time_budget_seconds > 0.0;
  if (config.passes == 0 && !budgeted) return model;

  const std::span<const Sequence> corpus(train.sequences);
  MinibatchSampler sampler(train.size(), config.minibatch, config.seed ^ kSamplerSeedOffset,
                           config.sampling);
  BatchRunner runner(config.states, train.vocab.size(), config.threads);
  const EmissionPrior emission_prior = model.emission_prior();
  const SviPriors svi_priors{config.trans_prior, config.emit_prior};

  auto* scvi = std::get_if<ScviState>(&model.state);
  auto* svi = std::get_if<SviState>(&model.state);
  auto* hdp = scvi != nullptr ? std::get_if<HdpHmm>(&scvi->mode) : nullptr;
  std::optional<TableEvidence> evidence;
  if (hdp != nullptr) evidence.emplace(config.states);

  bool out_of_time = false;
  while (!out_of_time && (config.passes == 0 || pass < config.passes)) {
    ++pass;
    for (const auto& batch : sampler.next_pass()) {
      try {
        if (svi != nullptr) {
          svi_step(svi->rows, corpus, batch, model.schedule, svi_priors, runner);
        } else {
          process_minibatch(scvi->stats, corpus, batch, model.schedule, scvi->mode,
                            emission_prior, runner, evidence ? &*evidence : nullptr);
        }
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at step " +
                             std::to_string(model.schedule.step + 1));
      }

      if (hdp != nullptr && evidence->sequences >= config.large_batch) {
        const TableStats tables =
            expected_tables(*evidence, static_cast<double>(model.corpus_size), hdp->posterior);
        const double rho = step_size(config.kappa, model.schedule.hdp_step);
        hdp->posterior = update_hdp(hdp->posterior, tables, rho, hdp->priors);
        model.schedule.hdp_step += 1;
        evidence->clear();
      }

      const bool step_due =
          config.eval_every_steps > 0 && model.schedule.step % config.eval_every_steps == 0;
      const bool time_due =
          config.eval_every_seconds > 0.0 && elapsed() - last_eval_time >= config.eval_every_seconds;
      if (step_due || time_due) evaluate();
      if (budgeted && elapsed() >= config.time_budget_seconds) {
        out_of_time = true;
        break;
      }
    }
    if (last_eval_step != model.schedule.step) evaluate();
  }
  return model;
}

}  // namespace scvi
