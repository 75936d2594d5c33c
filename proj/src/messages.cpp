#include "scvi/messages.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "scvi/simd/kernels.hpp"

namespace scvi {
namespace {

void check_tokens(std::span<const Token> seq, std::size_t vocab) {
  if (seq.empty()) throw std::invalid_argument("forward_backward: empty sequence");
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (seq[t] >= vocab) {
      throw std::out_of_range("token " + std::to_string(seq[t]) + " at position " +
                              std::to_string(t) + " outside vocabulary of size " +
                              std::to_string(vocab));
    }
  }
}

// Normalized forward pass into ws alpha/scales. Returns the log likelihood,
// or -inf as soon as a step has zero total weight.
double run_forward(const ChainWeights& w, std::span<const Token> seq, std::vector<double>& alpha,
                   std::vector<double>& scales) {
  const auto& kt = simd::kernels();
  const std::size_t K = w.states();
  const std::size_t T = seq.size();
  alpha.assign(T * K, 0.0);
  scales.assign(T, 0.0);

  double loglik = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double* cur = alpha.data() + t * K;
    if (t == 0) {
      kt.mul(w.trans_row(0).data(), w.emission(seq[0]).data(), cur, K);
    } else {
      const double* prev = alpha.data() + (t - 1) * K;
      for (std::size_t k = 0; k < K; ++k) {
        if (prev[k] != 0.0) kt.axpy(prev[k], w.trans_row(k + 1).data(), cur, K);
      }
      kt.mul(cur, w.emission(seq[t]).data(), cur, K);
    }
    const double c = kt.sum(cur, K);
    if (!(c > 0.0)) return -std::numeric_limits<double>::infinity();
    kt.scale(1.0 / c, cur, K);
    scales[t] = c;
    loglik += std::log(c);
  }
  return loglik;
}

}  // namespace

void SurrogateParams::validate(double tol) const {
  const std::size_t K = trans.cols();
  if (K == 0 || trans.rows() != K + 1 || emit.rows() != K || emit.cols() == 0) {
    throw std::invalid_argument("surrogate params: inconsistent shapes");
  }
  auto check = [tol](const Matrix& m, const char* what) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double s = 0.0;
      for (double x : m.row(r)) {
        if (!(x > 0.0) || !std::isfinite(x)) {
          throw std::invalid_argument(std::string("surrogate params: non-positive entry in ") +
                                      what + " row " + std::to_string(r));
        }
        s += x;
      }
      if (std::abs(s - 1.0) > tol) {
        throw std::invalid_argument(std::string("surrogate params: ") + what + " row " +
                                    std::to_string(r) + " sums to " + std::to_string(s));
      }
    }
  };
  check(trans, "transition");
  check(emit, "emission");
}

std::span<const double> SequencePosterior::pair_slice(std::size_t t) const noexcept {
  const std::size_t K = states();
  const std::size_t stride = (K + 1) * K;
  return {pairwise.data() + t * stride, stride};
}

double SequencePosterior::pair(std::size_t t, std::size_t from, std::size_t to) const noexcept {
  const std::size_t K = states();
  return pairwise[t * (K + 1) * K + from * K + to];
}

ChainWeights::ChainWeights(Matrix trans, const Matrix& emit)
    : trans_(std::move(trans)), emit_by_token_(transpose(emit)) {
  if (trans_.cols() == 0 || trans_.rows() != trans_.cols() + 1 || emit.rows() != trans_.cols()) {
    throw std::invalid_argument("chain weights: inconsistent shapes");
  }
}

CountAccumulator::CountAccumulator(std::size_t states, std::size_t vocab)
    : trans_counts(states + 1, states),
      emit_counts_by_token(vocab, states),
      touched(vocab, 0) {}

void CountAccumulator::clear() {
  trans_counts.fill(0.0);
  for (Token w : touched_tokens) {
    auto row = emit_counts_by_token.row(w);
    std::fill(row.begin(), row.end(), 0.0);
    touched[w] = 0;
  }
  touched_tokens.clear();
  tokens = 0.0;
  sequences = 0;
}

void CountAccumulator::merge(const CountAccumulator& other) {
  const auto& kt = simd::kernels();
  kt.axpy(1.0, other.trans_counts.data(), trans_counts.data(), trans_counts.size());
  const std::size_t K = trans_counts.cols();
  for (Token w : other.touched_tokens) {
    if (!touched[w]) {
      touched[w] = 1;
      touched_tokens.push_back(w);
    }
    kt.axpy(1.0, other.emit_counts_by_token.row(w).data(), emit_counts_by_token.row(w).data(), K);
  }
  tokens += other.tokens;
  sequences += other.sequences;
}

void MessageWorkspace::reserve(std::size_t length, std::size_t states) {
  alpha.reserve(length * states);
  scales.reserve(length);
}

SequencePosterior forward_backward(const ChainWeights& w, std::span<const Token> seq) {
  check_tokens(seq, w.vocab());
  const auto& kt = simd::kernels();
  const std::size_t K = w.states();
  const std::size_t T = seq.size();
  const std::size_t stride = (K + 1) * K;

  MessageWorkspace ws;
  SequencePosterior post;
  post.loglik = run_forward(w, seq, ws.alpha, ws.scales);
  if (!std::isfinite(post.loglik)) {
    throw std::domain_error("forward_backward: sequence has zero probability under the chain");
  }
  post.unary = Matrix(T, K);
  post.pairwise.assign(T * stride, 0.0);

  std::vector<double> beta(K, 1.0), beta_prev(K), weighted(K);
  for (std::size_t t = T; t-- > 0;) {
    kt.mul(ws.alpha.data() + t * K, beta.data(), post.unary.row(t).data(), K);
    kt.mul(w.emission(seq[t]).data(), beta.data(), weighted.data(), K);
    double* slice = post.pairwise.data() + t * stride;
    const double inv_c = 1.0 / ws.scales[t];
    if (t == 0) {
      kt.scaled_mul_add(inv_c, w.trans_row(0).data(), weighted.data(), slice, K);
      break;
    }
    const double* prev = ws.alpha.data() + (t - 1) * K;
    for (std::size_t k = 0; k < K; ++k) {
      kt.scaled_mul_add(prev[k] * inv_c, w.trans_row(k + 1).data(), weighted.data(),
                        slice + (k + 1) * K, K);
      beta_prev[k] = kt.dot(w.trans_row(k + 1).data(), weighted.data(), K) * inv_c;
    }
    beta.swap(beta_prev);
  }
  return post;
}

SequencePosterior forward_backward(const SurrogateParams& params, std::span<const Token> seq) {
  return forward_backward(ChainWeights(params), seq);
}

LocalStats local_stats(const SequencePosterior& post, std::span<const Token> seq,
                       std::size_t vocab) {
  const std::size_t K = post.states();
  const std::size_t T = post.length();
  if (seq.size() != T) throw std::invalid_argument("local_stats: posterior/sequence length mismatch");
  LocalStats out{Matrix(K + 1, K), Matrix(K, vocab)};
  const auto& kt = simd::kernels();
  for (std::size_t t = 0; t < T; ++t) {
    kt.axpy(1.0, post.pair_slice(t).data(), out.trans_counts.data(), (K + 1) * K);
    if (seq[t] >= vocab) throw std::out_of_range("local_stats: token outside vocabulary");
    for (std::size_t k = 0; k < K; ++k) out.emit_counts(k, seq[t]) += post.unary(t, k);
  }
  return out;
}

double accumulate_sequence(const ChainWeights& w, std::span<const Token> seq,
                           CountAccumulator& acc, MessageWorkspace& ws,
                           PairwiseObserver* observer) {
  check_tokens(seq, w.vocab());
  const auto& kt = simd::kernels();
  const std::size_t K = w.states();
  const std::size_t T = seq.size();
  const std::size_t stride = (K + 1) * K;

  const double loglik = run_forward(w, seq, ws.alpha, ws.scales);
  if (!std::isfinite(loglik)) return loglik;

  ws.beta.assign(K, 1.0);
  ws.beta_prev.assign(K, 0.0);
  ws.weighted.assign(K, 0.0);
  if (observer != nullptr) {
    ws.slice.assign(stride, 0.0);
    observer->begin_sequence(T);
  }

  for (std::size_t t = T; t-- > 0;) {
    const Token x = seq[t];
    if (!acc.touched[x]) {
      acc.touched[x] = 1;
      acc.touched_tokens.push_back(x);
    }
    kt.scaled_mul_add(1.0, ws.alpha.data() + t * K, ws.beta.data(),
                      acc.emit_counts_by_token.row(x).data(), K);
    kt.mul(w.emission(x).data(), ws.beta.data(), ws.weighted.data(), K);
    const double inv_c = 1.0 / ws.scales[t];

    if (t == 0) {
      if (observer != nullptr) {
        std::fill(ws.slice.begin(), ws.slice.end(), 0.0);
        kt.scaled_mul_add(inv_c, w.trans_row(0).data(), ws.weighted.data(), ws.slice.data(), K);
        kt.axpy(1.0, ws.slice.data(), acc.trans_counts.data(), K);
        observer->observe(0, ws.slice);
      } else {
        kt.scaled_mul_add(inv_c, w.trans_row(0).data(), ws.weighted.data(),
                          acc.trans_counts.row(0).data(), K);
      }
      break;
    }

    const double* prev = ws.alpha.data() + (t - 1) * K;
    if (observer != nullptr) {
      std::fill(ws.slice.begin(), ws.slice.begin() + K, 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        double* row = ws.slice.data() + (k + 1) * K;
        kt.mul(w.trans_row(k + 1).data(), ws.weighted.data(), row, K);
        kt.scale(prev[k] * inv_c, row, K);
      }
      kt.axpy(1.0, ws.slice.data() + K, acc.trans_counts.data() + K, K * K);
      observer->observe(t, ws.slice);
    } else {
      for (std::size_t k = 0; k < K; ++k) {
        kt.scaled_mul_add(prev[k] * inv_c, w.trans_row(k + 1).data(), ws.weighted.data(),
                          acc.trans_counts.row(k + 1).data(), K);
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      ws.beta_prev[k] = kt.dot(w.trans_row(k + 1).data(), ws.weighted.data(), K) * inv_c;
    }
    ws.beta.swap(ws.beta_prev);
  }

  if (observer != nullptr) observer->end_sequence();
  acc.tokens += static_cast<double>(T);
  acc.sequences += 1;
  return loglik;
}

double forward_loglik(const ChainWeights& w, std::span<const Token> seq, MessageWorkspace& ws) {
  check_tokens(seq, w.vocab());
  return run_forward(w, seq, ws.alpha, ws.scales);
}

}  // namespace scvi
