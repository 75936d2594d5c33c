#include "scvi/svi.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "scvi/core_math.hpp"
#include "scvi/simd/kernels.hpp"

namespace scvi {
namespace {

Matrix geometric_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double total = 0.0;
    for (double x : m.row(r)) total += x;
    const double log_norm = digamma(total);
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = std::exp(digamma(m(r, c)) - log_norm);
  }
  return out;
}

void normalize_rows(Matrix& m) {
  const auto& kt = simd::kernels();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    kt.scale(1.0 / kt.sum(row.data(), row.size()), row.data(), row.size());
  }
}

}  // namespace

void DirichletRows::validate() const {
  const std::size_t K = trans.cols();
  if (K == 0 || trans.rows() != K + 1 || emit.rows() != K) {
    throw std::invalid_argument("dirichlet rows: inconsistent shapes");
  }
  for (const Matrix* m : {&trans, &emit}) {
    for (double x : m->flat()) {
      if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("dirichlet rows: non-positive or non-finite parameter");
      }
    }
  }
}

DirichletRows svi_initial(const GlobalStats& init, const SviPriors& priors) {
  DirichletRows rows{init.trans, init.emission.expected_t};
  for (double& x : rows.trans.flat()) x += priors.trans;
  for (double& x : rows.emit.flat()) x += priors.emit;
  rows.validate();
  return rows;
}

ChainWeights svi_message_weights(const DirichletRows& rows) {
  return ChainWeights(geometric_rows(rows.trans), geometric_rows(rows.emit));
}

SurrogateParams svi_surrogate(const DirichletRows& rows) {
  SurrogateParams params{geometric_rows(rows.trans), geometric_rows(rows.emit)};
  normalize_rows(params.trans);
  normalize_rows(params.emit);
  return params;
}

SurrogateParams svi_mean_params(const DirichletRows& rows) {
  SurrogateParams params{rows.trans, rows.emit};
  normalize_rows(params.trans);
  normalize_rows(params.emit);
  return params;
}

void svi_blend(DirichletRows& rows, const CountAccumulator& counts, double rho, double scale,
               const SviPriors& priors) {
  const auto& kt = simd::kernels();
  const std::size_t K = rows.states();
  const double keep = 1.0 - rho;
  const double gain = rho * scale;

  kt.blend(keep, gain, counts.trans_counts.data(), rows.trans.data(), rows.trans.size());
  for (double& x : rows.trans.flat()) x += rho * priors.trans;

  kt.scale(keep, rows.emit.data(), rows.emit.size());
  for (double& x : rows.emit.flat()) x += rho * priors.emit;
  for (Token w : counts.touched_tokens) {
    const auto local = counts.emit_counts_by_token.row(w);
    for (std::size_t k = 0; k < K; ++k) rows.emit(k, w) += gain * local[k];
  }
}

MinibatchReport svi_step(DirichletRows& rows, std::span<const Sequence> corpus,
                         std::span<const std::size_t> batch, Schedule& sched,
                         const SviPriors& priors, BatchRunner& runner) {
  if (batch.empty()) throw std::invalid_argument("svi_step: empty batch");
  const ChainWeights weights = svi_message_weights(rows);
  const CountAccumulator& counts = runner.run(weights, corpus, batch);

  MinibatchReport report;
  report.rho = step_size(sched);
  report.sequences = batch.size();
  const double scale = static_cast<double>(corpus.size()) / static_cast<double>(batch.size());
  svi_blend(rows, counts, report.rho, scale, priors);
  sched.step += 1;
  for (double x : rows.trans.flat()) {
    if (!std::isfinite(x)) throw NumericalError("svi: non-finite transition parameter");
  }
  for (double x : rows.emit.flat()) {
    if (!std::isfinite(x)) throw NumericalError("svi: non-finite emission parameter");
  }
  return report;
}

}  // namespace scvi
