#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>

#include "scvi/corpus.hpp"
#include "scvi/emissions.hpp"
#include "scvi/engine.hpp"
#include "scvi/hdp.hpp"
#include "scvi/svi.hpp"

namespace scvi {

enum class Algorithm : std::uint32_t { ScviHmm = 0, ScviHdpHmm = 1, SviHmm = 2 };

std::string_view algorithm_name(Algorithm a) noexcept;
/// Parses "scvi-hmm", "scvi-hdphmm" or "svi-hmm"; throws std::invalid_argument.
Algorithm parse_algorithm(std::string_view name);

struct ScviState {
  GlobalStats stats;
  ModelMode mode;
};

struct SviState {
  DirichletRows rows;
};

/// Everything needed to evaluate or continue training.
struct Model {
  Algorithm algorithm = Algorithm::ScviHmm;
  std::uint64_t corpus_size = 0;  // N used by the stochastic updates
  double trans_prior = 0.1;
  double emit_prior = 0.1;
  HdpPriors hdp_priors;
  Schedule schedule;
  std::variant<ScviState, SviState> state;
  Vocabulary vocab;

  [[nodiscard]] std::size_t states() const;
  [[nodiscard]] std::size_t vocab_size() const;
  [[nodiscard]] EmissionPrior emission_prior() const;

  /// Chain used for held-out evaluation: the SCVI surrogate, or the SVI
  /// posterior mean.
  [[nodiscard]] SurrogateParams predictive_params() const;

  /// Expected transitions into each state (prior excluded).
  [[nodiscard]] std::vector<double> state_occupancy() const;
};

/// States whose share of the total occupancy exceeds `threshold`.
std::size_t effective_states(const Model& model, double threshold = 1e-3);

double predictive_log_likelihood(const Model& model, std::span<const Sequence> heldout);

}  // namespace scvi
