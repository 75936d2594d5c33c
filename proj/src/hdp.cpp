#include "scvi/hdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace scvi {

HdpPosterior HdpPosterior::initial(std::size_t truncation, const HdpPriors& priors) {
  if (truncation == 0) throw std::invalid_argument("hdp: truncation must be >= 1");
  if (!priors.alpha.valid() || !priors.gamma.valid()) {
    throw std::invalid_argument("hdp: invalid hyperpriors");
  }
  HdpPosterior post;
  post.sticks.assign(truncation, BetaParams{1.0, gamma_expect(priors.gamma)});
  post.alpha = priors.alpha;
  post.gamma = priors.gamma;
  post.geo_alpha_pi.assign(truncation, kInitialGeoAlphaPi);
  post.pinned = true;
  return post;
}

void HdpPosterior::refresh() {
  geo_alpha_pi = scvi::geo_alpha_pi(*this);
  pinned = false;
}

void HdpPosterior::validate() const {
  if (sticks.empty() || geo_alpha_pi.size() != sticks.size()) {
    throw std::invalid_argument("hdp posterior: inconsistent truncation");
  }
  for (std::size_t k = 0; k < sticks.size(); ++k) {
    if (!sticks[k].valid()) throw std::invalid_argument("hdp posterior: invalid stick " + std::to_string(k));
    if (!(geo_alpha_pi[k] > 0.0) || !std::isfinite(geo_alpha_pi[k])) {
      throw std::invalid_argument("hdp posterior: non-positive G[alpha pi]");
    }
  }
  if (!alpha.valid() || !gamma.valid()) throw std::invalid_argument("hdp posterior: invalid concentration");
}

std::vector<double> geo_alpha_pi(const HdpPosterior& post) {
  const double log_alpha = gamma_expect_log(post.alpha);
  std::vector<double> out(post.truncation());
  double log_remaining = 0.0;
  for (std::size_t k = 0; k < post.truncation(); ++k) {
    const auto [log_stick, log_rest] = beta_expect_logs(post.sticks[k]);
    out[k] = std::exp(log_alpha + log_stick + log_remaining);
    log_remaining += log_rest;
  }
  return out;
}

TableEvidence::TableEvidence(std::size_t states)
    : counts(states + 1, states), log_empty(states + 1, states), log_empty_row(states + 1, 0.0) {}

void TableEvidence::clear() {
  counts.fill(0.0);
  log_empty.fill(0.0);
  std::fill(log_empty_row.begin(), log_empty_row.end(), 0.0);
  sequences = 0;
}

void TableEvidence::merge(const TableEvidence& other) {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts.data()[i] += other.counts.data()[i];
    log_empty.data()[i] += other.log_empty.data()[i];
  }
  for (std::size_t k = 0; k < log_empty_row.size(); ++k) log_empty_row[k] += other.log_empty_row[k];
  sequences += other.sequences;
}

void TableEvidence::add_slice(std::span<const double> slice) {
  const std::size_t K = states();
  for (std::size_t from = 0; from <= K; ++from) {
    double occupancy = 0.0;
    for (std::size_t to = 0; to < K; ++to) {
      const double p = std::clamp(slice[from * K + to], 0.0, 1.0);
      counts(from, to) += p;
      log_empty(from, to) += std::log1p(-p);
      occupancy += p;
    }
    log_empty_row[from] += std::log1p(-std::min(occupancy, 1.0));
  }
}

void TableEvidence::add_sequence(const SequencePosterior& post) {
  if (post.states() != states()) throw std::invalid_argument("table evidence: state count mismatch");
  for (std::size_t t = 0; t < post.length(); ++t) add_slice(post.pair_slice(t));
  sequences += 1;
}

TableStats::TableStats(std::size_t states)
    : expected_tables(states + 1, states),
      expected_log_eta(states + 1, 0.0),
      q_occupied(states + 1, states),
      occupied_count(states + 1, states) {}

TableStats expected_tables(const TableEvidence& evidence, double replicas,
                           const HdpPosterior& post) {
  const std::size_t K = evidence.states();
  if (post.truncation() != K) throw std::invalid_argument("expected_tables: truncation mismatch");
  if (evidence.sequences == 0) throw std::invalid_argument("expected_tables: no evidence");
  if (!(replicas > 0.0)) throw std::invalid_argument("expected_tables: replica count must be positive");

  const double inv_s = 1.0 / static_cast<double>(evidence.sequences);
  const double mean_alpha = gamma_expect(post.alpha);
  TableStats out(K);
  for (std::size_t from = 0; from <= K; ++from) {
    double row_count = 0.0;
    for (std::size_t to = 0; to < K; ++to) {
      const double mean_count = evidence.counts(from, to) * inv_s;
      row_count += mean_count;
      if (!(mean_count > 0.0)) continue;
      const double q = -std::expm1(replicas * evidence.log_empty(from, to) * inv_s);
      if (!(q > 0.0)) continue;
      const double g = post.geo_alpha_pi[to];
      const double customers = replicas * mean_count / q;
      out.q_occupied(from, to) = q;
      out.occupied_count(from, to) = customers;
      out.expected_tables(from, to) = g * q * (digamma(g + customers) - digamma(g));
    }
    if (!(row_count > 0.0)) continue;
    const double q_row = -std::expm1(replicas * evidence.log_empty_row[from] * inv_s);
    if (!(q_row > 0.0)) continue;
    const double customers = replicas * row_count / q_row;
    out.expected_log_eta[from] = q_row * (digamma(mean_alpha) - digamma(mean_alpha + customers));
  }
  return out;
}

TableStats expected_tables(const SequencePosterior& seq, double replicas,
                           const HdpPosterior& post) {
  TableEvidence evidence(seq.states());
  evidence.add_sequence(seq);
  return expected_tables(evidence, replicas, post);
}

HdpPosterior update_hdp(const HdpPosterior& post, const TableStats& tables, double rho,
                        const HdpPriors& priors) {
  const std::size_t K = post.truncation();
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("update_hdp: rho must lie in [0, 1]");
  if (tables.expected_tables.cols() != K) throw std::invalid_argument("update_hdp: truncation mismatch");

  std::vector<double> column(K, 0.0);
  for (std::size_t from = 0; from <= K; ++from) {
    for (std::size_t to = 0; to < K; ++to) column[to] += tables.expected_tables(from, to);
  }
  double total_tables = 0.0;
  for (double c : column) total_tables += c;
  double log_eta_sum = 0.0;
  for (double e : tables.expected_log_eta) log_eta_sum += e;

  if (rho == 0.0) return post;

  const double keep = 1.0 - rho;
  const double mean_gamma = gamma_expect(post.gamma);
  HdpPosterior next = post;
  double tables_beyond = 0.0;
  for (std::size_t k = K; k-- > 0;) {
    next.sticks[k].u = keep * post.sticks[k].u + rho * (1.0 + column[k]);
    next.sticks[k].v = keep * post.sticks[k].v + rho * (mean_gamma + tables_beyond);
    tables_beyond += column[k];
  }
  next.alpha.a = keep * post.alpha.a + rho * (priors.alpha.a + total_tables);
  next.alpha.b = keep * post.alpha.b + rho * (priors.alpha.b - log_eta_sum);

  double log_rest_sum = 0.0;
  for (const auto& stick : next.sticks) log_rest_sum += beta_expect_logs(stick).second;
  next.gamma.a = keep * post.gamma.a + rho * (priors.gamma.a + static_cast<double>(K));
  next.gamma.b = keep * post.gamma.b + rho * (priors.gamma.b - log_rest_sum);

  next.refresh();
  next.validate();
  return next;
}

}  // namespace scvi
