#include "scvi/model.hpp"

#include <stdexcept>
#include <string>

namespace scvi {

std::string_view algorithm_name(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::ScviHmm: return "scvi-hmm";
    case Algorithm::ScviHdpHmm: return "scvi-hdphmm";
    case Algorithm::SviHmm: return "svi-hmm";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::ScviHmm, Algorithm::ScviHdpHmm, Algorithm::SviHmm}) {
    if (algorithm_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) +
                              "' (expected scvi-hmm, scvi-hdphmm or svi-hmm)");
}

std::size_t Model::states() const {
  if (const auto* s = std::get_if<ScviState>(&state)) return s->stats.states();
  return std::get<SviState>(state).rows.states();
}

std::size_t Model::vocab_size() const {
  if (const auto* s = std::get_if<ScviState>(&state)) return s->stats.vocab();
  return std::get<SviState>(state).rows.vocab();
}

EmissionPrior Model::emission_prior() const {
  return EmissionPrior::symmetric_dirichlet(vocab_size(), emit_prior);
}

SurrogateParams Model::predictive_params() const {
  if (const auto* s = std::get_if<ScviState>(&state)) {
    return build_surrogate(s->stats, s->mode, emission_prior());
  }
  return svi_mean_params(std::get<SviState>(state).rows);
}

std::vector<double> Model::state_occupancy() const {
  const std::size_t K = states();
  std::vector<double> mass(K, 0.0);
  if (const auto* s = std::get_if<ScviState>(&state)) {
    for (std::size_t r = 0; r <= K; ++r) {
      for (std::size_t k = 0; k < K; ++k) mass[k] += s->stats.trans(r, k);
    }
  } else {
    const auto& rows = std::get<SviState>(state).rows;
    for (std::size_t r = 0; r <= K; ++r) {
      for (std::size_t k = 0; k < K; ++k) mass[k] += rows.trans(r, k) - trans_prior;
    }
  }
  for (double& m : mass) m = std::max(m, 0.0);
  return mass;
}

std::size_t effective_states(const Model& model, double threshold) {
  const auto mass = model.state_occupancy();
  double total = 0.0;
  for (double m : mass) total += m;
  if (!(total > 0.0)) return 0;
  std::size_t count = 0;
  for (double m : mass) count += (m > threshold * total) ? 1 : 0;
  return count;
}

double predictive_log_likelihood(const Model& model, std::span<const Sequence> heldout) {
  return predictive_log_likelihood(ChainWeights(model.predictive_params()), heldout);
}

}  // namespace scvi
