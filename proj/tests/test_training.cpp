#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "scvi/corpus.hpp"
#include "scvi/training.hpp"

namespace {

scvi::TrainConfig small_config(scvi::Algorithm algo) {
  scvi::TrainConfig c;
  c.algorithm = algo;
  c.states = 4;
  c.kappa = 0.6;
  c.minibatch = 20;
  c.large_batch = 40;
  c.passes = 3;
  c.seed = 9;
  return c;
}

struct Data {
  scvi::Corpus train;
  scvi::Corpus held;
};

Data make_data() {
  const auto s = scvi::generate_synthetic(scvi::random_synthetic_spec(3, 10, 200, 5, 15, 21));
  auto [a, b] = scvi::split(s.corpus, 0.8, 2);
  return {a, b};
}

std::vector<scvi::MetricRecord> run(const Data& d, const scvi::TrainConfig& c, scvi::Model* out = nullptr) {
  std::vector<scvi::MetricRecord> rows;
  auto m = scvi::train(d.train, d.held.sequences, c, [&](const scvi::MetricRecord& r) { rows.push_back(r); });
  if (out) *out = std::move(m);
  return rows;
}

}  // namespace

TEST_CASE("configuration errors name the field") {
  auto c = small_config(scvi::Algorithm::ScviHmm);
  CHECK_NOTHROW(c.validate());
  c.kappa = 0.5;
  CHECK_NOTHROW(c.validate());
  c.kappa = 0.3;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("kappa"), std::invalid_argument);
  c = small_config(scvi::Algorithm::ScviHmm);
  c.states = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("states"), std::invalid_argument);
  c = small_config(scvi::Algorithm::ScviHmm);
  c.large_batch = 5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config(scvi::Algorithm::ScviHmm);
  c.emit_prior = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("zero passes return the initial model") {
  const auto d = make_data();
  auto c = small_config(scvi::Algorithm::ScviHmm);
  c.passes = 0;
  scvi::Model m;
  const auto rows = run(d, c, &m);
  CHECK(m.schedule.step == 0);
  const auto init = scvi::initialize_model(c, d.train);
  CHECK(std::get<scvi::ScviState>(m.state).stats == std::get<scvi::ScviState>(init.state).stats);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].step == 0);
}

TEST_CASE("metrics are reported at step zero and after every pass") {
  const auto d = make_data();
  const auto c = small_config(scvi::Algorithm::ScviHmm);
  scvi::Model m;
  const auto rows = run(d, c, &m);
  const std::size_t per_pass = (d.train.size() + c.minibatch - 1) / c.minibatch;
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].step == i * per_pass);
    CHECK(rows[i].pass == i);
    CHECK(std::isfinite(rows[i].heldout_ll));
    CHECK(rows[i].k_effective >= 1);
    CHECK(rows[i].k_effective <= 4);
  }
  CHECK(rows.back().heldout_ll > rows.front().heldout_ll);
  CHECK(m.schedule.step == 3 * per_pass);
  CHECK(rows.back().heldout_ll == scvi::predictive_log_likelihood(m, d.held.sequences));

  auto every = c;
  every.eval_every_steps = 2;
  const auto more = run(d, every);
  CHECK(more.size() > rows.size());
}

TEST_CASE("single-threaded training is deterministic") {
  const auto d = make_data();
  for (auto algo : {scvi::Algorithm::ScviHmm, scvi::Algorithm::ScviHdpHmm, scvi::Algorithm::SviHmm}) {
    const auto c = small_config(algo);
    const auto a = run(d, c), b = run(d, c);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].step == b[i].step);
      CHECK(a[i].heldout_ll == b[i].heldout_ll);
      CHECK(a[i].k_effective == b[i].k_effective);
    }
  }
}

TEST_CASE("thread counts give matching likelihoods") {
  const auto d = make_data();
  auto c = small_config(scvi::Algorithm::ScviHdpHmm);
  const auto one = run(d, c);
  c.threads = 3;
  const auto three = run(d, c);
  REQUIRE(one.size() == three.size());
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(three[i].heldout_ll == doctest::Approx(one[i].heldout_ll).epsilon(1e-9));
}

TEST_CASE("HDP posterior updates run once per large batch") {
  const auto d = make_data();
  const auto c = small_config(scvi::Algorithm::ScviHdpHmm);
  scvi::Model m;
  run(d, c, &m);
  const auto& mode = std::get<scvi::HdpHmm>(std::get<scvi::ScviState>(m.state).mode);
  CHECK(!mode.posterior.pinned);
  CHECK(m.schedule.hdp_step == (3 * d.train.size()) / c.large_batch);
  CHECK_NOTHROW(mode.posterior.validate());
}

TEST_CASE("SVI models evaluate with posterior means") {
  const auto d = make_data();
  const auto c = small_config(scvi::Algorithm::SviHmm);
  scvi::Model m;
  const auto rows = run(d, c, &m);
  const auto p = m.predictive_params();
  CHECK_NOTHROW(p.validate());
  CHECK(rows.back().heldout_ll > rows.front().heldout_ll);
}
