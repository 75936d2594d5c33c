#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "scvi/messages.hpp"
#include "scvi/simd/kernels.hpp"

using scvi::Matrix;
using scvi::SurrogateParams;

namespace {

Matrix random_stochastic(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(0.7, 1.0);
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (m(i, j) = g(rng) + 1e-3);
    for (std::size_t j = 0; j < c; ++j) m(i, j) /= s;
  }
  return m;
}

SurrogateParams random_params(std::size_t K, std::size_t V, std::mt19937_64& rng) {
  return {random_stochastic(K + 1, K, rng), random_stochastic(K, V, rng)};
}

oracle::Mat to_mat(const Matrix& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

std::vector<unsigned> as_unsigned(const scvi::Sequence& s) { return {s.begin(), s.end()}; }

scvi::Sequence random_seq(std::size_t T, std::size_t V, std::mt19937_64& rng) {
  std::uniform_int_distribution<scvi::Token> d(0, static_cast<scvi::Token>(V - 1));
  scvi::Sequence s(T);
  for (auto& x : s) x = d(rng);
  return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

void check_against(const scvi::SequencePosterior& got, const oracle::Posterior& want, double tol) {
  const std::size_t T = got.length(), K = got.states();
  CHECK(rel(got.loglik, want.loglik) < tol);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) CHECK(std::abs(got.unary(t, k) - want.unary[t][k]) < tol);
    for (std::size_t j = 0; j <= K; ++j)
      for (std::size_t k = 0; k < K; ++k) CHECK(std::abs(got.pair(t, j, k) - want.pairwise[t][j][k]) < tol);
  }
}

}  // namespace

TEST_CASE("single token posterior is proportional to start times emission") {
  SurrogateParams p{Matrix(3, 2), Matrix(2, 2)};
  p.trans(0, 0) = 0.3;
  p.trans(0, 1) = 0.7;
  p.trans(1, 0) = p.trans(1, 1) = p.trans(2, 0) = p.trans(2, 1) = 0.5;
  p.emit(0, 0) = 0.9;
  p.emit(0, 1) = 0.1;
  p.emit(1, 0) = 0.2;
  p.emit(1, 1) = 0.8;
  const scvi::Sequence seq{0};
  const auto post = scvi::forward_backward(p, seq);
  const double z = 0.3 * 0.9 + 0.7 * 0.2;
  CHECK(std::abs(post.unary(0, 0) - 0.27 / z) < 1e-14);
  CHECK(std::abs(post.unary(0, 1) - 0.14 / z) < 1e-14);
  CHECK(std::abs(post.loglik - std::log(z)) < 1e-14);
  CHECK(std::abs(post.pair(0, 0, 0) - 0.27 / z) < 1e-14);
  CHECK(post.pair(0, 1, 0) == 0.0);
  CHECK(post.pair(0, 2, 1) == 0.0);
}

TEST_CASE("one state chain has unit marginals and a unigram likelihood") {
  SurrogateParams p{Matrix(2, 1, 1.0), Matrix(1, 3)};
  p.emit(0, 0) = 0.5;
  p.emit(0, 1) = 0.3;
  p.emit(0, 2) = 0.2;
  const scvi::Sequence seq{0, 2, 1, 1};
  const auto post = scvi::forward_backward(p, seq);
  for (std::size_t t = 0; t < 4; ++t) CHECK(post.unary(t, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(post.loglik - std::log(0.5 * 0.2 * 0.3 * 0.3)) < 1e-14);
  CHECK(post.pair(0, 0, 0) == doctest::Approx(1.0));
  CHECK(post.pair(2, 1, 0) == doctest::Approx(1.0));
}

TEST_CASE("forward-backward matches brute-force enumeration") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t K = 1 + trial % 4, V = 2 + trial % 5, T = 1 + trial % 6;
    const auto p = random_params(K, V, rng);
    const auto seq = random_seq(T, V, rng);
    const auto want = oracle::brute_force(to_mat(p.trans), to_mat(p.emit), as_unsigned(seq));
    check_against(scvi::forward_backward(p, seq), want, 1e-10);
  }
}

TEST_CASE("forward-backward matches a log-space recursion on long sequences") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t K = 2 + trial % 5, V = 30, T = 200 + 50 * trial;
    const auto p = random_params(K, V, rng);
    const auto seq = random_seq(T, V, rng);
    const auto want = oracle::log_space(to_mat(p.trans), to_mat(p.emit), as_unsigned(seq));
    const auto got = scvi::forward_backward(p, seq);
    CHECK(rel(got.loglik, want.loglik) < 1e-10);
    for (std::size_t t = 0; t < T; t += 37)
      for (std::size_t k = 0; k < K; ++k) CHECK(std::abs(got.unary(t, k) - want.unary[t][k]) < 1e-9);
  }
}

TEST_CASE("marginals are distributions and pairwise slices are consistent") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t K = 1 + trial % 6, V = 7, T = 1 + trial % 15;
    const auto p = random_params(K, V, rng);
    const auto seq = random_seq(T, V, rng);
    const auto post = scvi::forward_backward(p, seq);
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        CHECK(post.unary(t, k) >= 0.0);
        s += post.unary(t, k);
        double col = 0.0;
        for (std::size_t j = 0; j <= K; ++j) col += post.pair(t, j, k);
        CHECK(std::abs(col - post.unary(t, k)) < 1e-12);
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
      for (std::size_t j = 0; j <= K; ++j) {
        double row = 0.0;
        for (std::size_t k = 0; k < K; ++k) row += post.pair(t, j, k);
        const double want = t == 0 ? (j == 0 ? 1.0 : 0.0) : (j == 0 ? 0.0 : post.unary(t - 1, j - 1));
        CHECK(std::abs(row - want) < 1e-12);
      }
    }
  }
}

TEST_CASE("local statistics conserve mass") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t K = 1 + trial % 5, V = 3 + trial % 4, T = 1 + trial % 20;
    const auto p = random_params(K, V, rng);
    const auto seq = random_seq(T, V, rng);
    const auto post = scvi::forward_backward(p, seq);
    const auto ls = scvi::local_stats(post, seq, V);
    const auto& ct = ls.trans_counts.flat();
    const auto& ce = ls.emit_counts.flat();
    CHECK(std::abs(std::accumulate(ct.begin(), ct.end(), 0.0) - double(T)) < 1e-10);
    CHECK(std::abs(std::accumulate(ce.begin(), ce.end(), 0.0) - double(T)) < 1e-10);
    double start = 0.0;
    for (double x : ls.trans_counts.row(0)) start += x;
    CHECK(std::abs(start - 1.0) < 1e-12);
    for (std::size_t w = 0; w < V; ++w) {
      double col = 0.0;
      for (std::size_t k = 0; k < K; ++k) col += ls.emit_counts(k, w);
      CHECK(std::abs(col - double(std::count(seq.begin(), seq.end(), w))) < 1e-10);
    }
    if (T <= 6) {
      const auto want = oracle::counts(oracle::brute_force(to_mat(p.trans), to_mat(p.emit), as_unsigned(seq)),
                                       as_unsigned(seq), V);
      for (std::size_t j = 0; j <= K; ++j)
        for (std::size_t k = 0; k < K; ++k) CHECK(std::abs(ls.trans_counts(j, k) - want.first[j][k]) < 1e-10);
    }
  }
}

TEST_CASE("relabeling states permutes the posterior") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t K = 2 + trial % 4, V = 6, T = 12;
    const auto p = random_params(K, V, rng);
    const auto seq = random_seq(T, V, rng);
    std::vector<std::size_t> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    SurrogateParams q{Matrix(K + 1, K), Matrix(K, V)};
    for (std::size_t k = 0; k < K; ++k) {
      q.trans(0, perm[k]) = p.trans(0, k);
      for (std::size_t k2 = 0; k2 < K; ++k2) q.trans(perm[k] + 1, perm[k2]) = p.trans(k + 1, k2);
      for (std::size_t w = 0; w < V; ++w) q.emit(perm[k], w) = p.emit(k, w);
    }
    const auto a = scvi::forward_backward(p, seq);
    const auto b = scvi::forward_backward(q, seq);
    CHECK(rel(a.loglik, b.loglik) < 1e-12);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < K; ++k) CHECK(std::abs(a.unary(t, k) - b.unary(t, perm[k])) < 1e-12);
  }
}

TEST_CASE("fused accumulation equals local statistics of the full posterior") {
  std::mt19937_64 rng(16);
  scvi::MessageWorkspace ws;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t K = 1 + trial % 6, V = 9, T = 1 + trial % 40;
    const auto p = random_params(K, V, rng);
    const scvi::ChainWeights cw(p);
    const auto seq = random_seq(T, V, rng);
    scvi::CountAccumulator acc(K, V);
    const double ll = scvi::accumulate_sequence(cw, seq, acc, ws);
    const auto post = scvi::forward_backward(cw, seq);
    const auto ls = scvi::local_stats(post, seq, V);
    CHECK(rel(ll, post.loglik) < 1e-12);
    CHECK(rel(scvi::forward_loglik(cw, seq, ws), post.loglik) < 1e-12);
    CHECK(acc.tokens == double(T));
    CHECK(acc.sequences == 1);
    for (std::size_t j = 0; j <= K; ++j)
      for (std::size_t k = 0; k < K; ++k) CHECK(std::abs(acc.trans_counts(j, k) - ls.trans_counts(j, k)) < 1e-12);
    for (std::size_t w = 0; w < V; ++w)
      for (std::size_t k = 0; k < K; ++k)
        CHECK(std::abs(acc.emit_counts_by_token(w, k) - ls.emit_counts(k, w)) < 1e-12);
  }
}

TEST_CASE("observer sees the pairwise slices of the full posterior") {
  struct Recorder : scvi::PairwiseObserver {
    std::vector<std::vector<double>> slices;
    std::size_t begun = 0, ended = 0;
    void begin_sequence(std::size_t length) override {
      ++begun;
      slices.assign(length, {});
    }
    void observe(std::size_t t, std::span<const double> s) override { slices[t].assign(s.begin(), s.end()); }
    void end_sequence() override { ++ended; }
  };
  std::mt19937_64 rng(17);
  const auto p = random_params(3, 5, rng);
  const scvi::ChainWeights cw(p);
  const auto seq = random_seq(9, 5, rng);
  scvi::CountAccumulator acc(3, 5);
  scvi::MessageWorkspace ws;
  Recorder rec;
  scvi::accumulate_sequence(cw, seq, acc, ws, &rec);
  CHECK(rec.begun == 1);
  CHECK(rec.ended == 1);
  const auto post = scvi::forward_backward(cw, seq);
  for (std::size_t t = 0; t < 9; ++t) {
    const auto want = post.pair_slice(t);
    REQUIRE(rec.slices[t].size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(rec.slices[t][i] - want[i]) < 1e-12);
  }
}

TEST_CASE("accumulator merge adds counts") {
  std::mt19937_64 rng(18);
  const auto p = random_params(3, 6, rng);
  const scvi::ChainWeights cw(p);
  scvi::MessageWorkspace ws;
  scvi::CountAccumulator all(3, 6), a(3, 6), b(3, 6);
  for (int i = 0; i < 6; ++i) {
    const auto seq = random_seq(5 + i, 6, rng);
    scvi::accumulate_sequence(cw, seq, all, ws);
    scvi::accumulate_sequence(cw, seq, i < 3 ? a : b, ws);
  }
  a.merge(b);
  CHECK(a.sequences == all.sequences);
  CHECK(a.tokens == all.tokens);
  for (std::size_t i = 0; i < all.trans_counts.size(); ++i)
    CHECK(std::abs(a.trans_counts.flat()[i] - all.trans_counts.flat()[i]) < 1e-12);
  for (std::size_t i = 0; i < all.emit_counts_by_token.size(); ++i)
    CHECK(std::abs(a.emit_counts_by_token.flat()[i] - all.emit_counts_by_token.flat()[i]) < 1e-12);
  a.clear();
  CHECK(a.sequences == 0);
  CHECK(a.tokens == 0.0);
  for (double x : a.trans_counts.flat()) CHECK(x == 0.0);
}

TEST_CASE("unnormalized weights report the log of total path weight") {
  std::mt19937_64 rng(19);
  const auto p = random_params(3, 4, rng);
  Matrix trans = p.trans, emit = p.emit;
  for (double& x : trans.flat()) x *= 0.5;
  for (double& x : emit.flat()) x *= 2.0;
  const auto seq = random_seq(7, 4, rng);
  const auto base = scvi::forward_backward(p, seq);
  const auto scaled = scvi::forward_backward(scvi::ChainWeights(trans, emit), seq);
  CHECK(std::abs(scaled.loglik - base.loglik) < 1e-12);
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(scaled.unary(t, k) - base.unary(t, k)) < 1e-12);
}

TEST_CASE("scalar and AVX2 kernels give the same posterior") {
  if (scvi::simd::avx2_kernels() == nullptr) return;
  std::mt19937_64 rng(20);
  scvi::MessageWorkspace ws;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t K = 1 + trial * 3, V = 25, T = 50;
    const auto p = random_params(K, V, rng);
    const scvi::ChainWeights cw(p);
    const auto seq = random_seq(T, V, rng);
    REQUIRE(scvi::simd::select_isa(scvi::simd::Isa::Scalar));
    scvi::CountAccumulator a(K, V);
    const double la = scvi::accumulate_sequence(cw, seq, a, ws);
    REQUIRE(scvi::simd::select_isa(scvi::simd::Isa::Avx2));
    scvi::CountAccumulator b(K, V);
    const double lb = scvi::accumulate_sequence(cw, seq, b, ws);
    CHECK(rel(la, lb) < 1e-12);
    for (std::size_t i = 0; i < a.trans_counts.size(); ++i)
      CHECK(std::abs(a.trans_counts.flat()[i] - b.trans_counts.flat()[i]) < 1e-11);
  }
}

TEST_CASE("invalid input is rejected") {
  std::mt19937_64 rng(21);
  const auto p = random_params(2, 3, rng);
  const scvi::Sequence empty;
  CHECK_THROWS_AS(scvi::forward_backward(p, empty), std::invalid_argument);
  const scvi::Sequence bad{0, 3};
  CHECK_THROWS_AS(scvi::forward_backward(p, bad), std::out_of_range);
  SurrogateParams zero = p;
  zero.emit(0, 1) = zero.emit(1, 1) = 0.0;
  const scvi::Sequence hits{1};
  CHECK_THROWS_AS(scvi::forward_backward(zero, hits), std::domain_error);
  CHECK_NOTHROW(p.validate());
  SurrogateParams skew = p;
  skew.trans(1, 0) += 0.01;
  CHECK_THROWS_AS(skew.validate(), std::invalid_argument);
}
