#include "scvi/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scvi/corpus.hpp"
#include "scvi/model_io.hpp"
#include "scvi/training.hpp"

namespace scvi::cli {
namespace {

struct TrainArgs {
  TrainConfig config;
  std::string algorithm = "scvi-hmm";
  std::string sampling = "shuffle";
  std::string train_path;
  std::string test_path;
  std::string vocab_path;
  std::string oov = "unk";
  double train_fraction = 0.9;
  std::uint64_t split_seed = 0;
  std::string model_out;
  std::string metrics_out;
  std::string vocab_out;
};

struct EvalArgs {
  std::string model_path;
  std::string corpus_path;
  std::string vocab_path;
  std::string oov = "unk";
  std::string metrics_out;
};

struct GenerateArgs {
  std::size_t states = 3;
  std::size_t symbols = 20;
  std::size_t sequences = 1000;
  std::size_t min_length = 10;
  std::size_t max_length = 30;
  std::uint64_t seed = 1;
  double concentration = 0.5;
  std::vector<double> trans;
  std::vector<double> emit;
  std::string out;
  std::string vocab_out;
  std::string truth_out;
};

const std::map<std::string, OovPolicy> kOovPolicies{{"unk", OovPolicy::MapToUnk},
                                                    {"error", OovPolicy::Error}};

Matrix reshape(const std::vector<double>& flat, std::size_t rows, std::size_t cols,
               const char* name) {
  if (flat.size() != rows * cols) {
    throw std::invalid_argument(std::string(name) + ": expected " + std::to_string(rows * cols) +
                                " values, got " + std::to_string(flat.size()));
  }
  Matrix m(rows, cols);
  std::copy(flat.begin(), flat.end(), m.data());
  return m;
}

nlohmann::json matrix_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

int do_train(TrainArgs& a, std::ostream& out, std::ostream& err) {
  a.config.algorithm = parse_algorithm(a.algorithm);
  a.config.sampling = a.sampling == "iid" ? SamplingMode::Iid : SamplingMode::Shuffle;
  try {
    a.config.validate();
  } catch (const std::invalid_argument& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kExitInvalidConfig;
  }

  const OovPolicy oov = kOovPolicies.at(a.oov);
  std::optional<Vocabulary> frozen;
  if (!a.vocab_path.empty()) frozen = Vocabulary::load(a.vocab_path);
  Corpus corpus = load_corpus(a.train_path, frozen, oov);
  if (corpus.skipped_lines > 0) {
    err << "skipped " << corpus.skipped_lines << " empty line(s) in " << a.train_path << '\n';
  }

  Corpus train_set;
  std::vector<Sequence> heldout;
  if (!a.test_path.empty()) {
    train_set = std::move(corpus);
    heldout = load_corpus(a.test_path, train_set.vocab, oov).sequences;
  } else {
    auto [tr, te] = split(corpus, a.train_fraction, a.split_seed);
    train_set = std::move(tr);
    heldout = std::move(te.sequences);
  }

  std::optional<MetricsWriter> metrics;
  if (!a.metrics_out.empty()) metrics.emplace(a.metrics_out);
  MetricSink sink;
  if (metrics) sink = [&](const MetricRecord& r) { metrics->write(r); };

  Model model = train(train_set, heldout, a.config, sink);
  save_model(model, a.model_out);
  if (!a.vocab_out.empty()) model.vocab.save(a.vocab_out);
  out << "trained " << algorithm_name(model.algorithm) << " K=" << model.states()
      << " V=" << model.vocab_size() << " steps=" << model.schedule.step << '\n';
  return 0;
}

int do_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const Model model = load_model(a.model_path);
  Vocabulary vocab = model.vocab;
  if (!a.vocab_path.empty()) {
    vocab = Vocabulary::load(a.vocab_path);
    if (vocab.size() != model.vocab_size()) {
      err << "vocabulary mismatch: vocabulary file has " << vocab.size()
          << " entries (including UNK), model has " << model.vocab_size() << '\n';
      return kExitFailure;
    }
  }
  const Corpus corpus = load_corpus(a.corpus_path, vocab, kOovPolicies.at(a.oov));
  const double ll = predictive_log_likelihood(model, corpus.sequences);
  out << format_real(ll) << '\n';
  if (!a.metrics_out.empty()) {
    MetricsWriter writer(a.metrics_out);
    writer.write(MetricRecord{model.schedule.step, 0, 0.0, ll, effective_states(model)});
  }
  return 0;
}

int do_generate(const GenerateArgs& a, std::ostream& out) {
  SyntheticSpec spec = random_synthetic_spec(a.states, a.symbols, a.sequences, a.min_length,
                                             a.max_length, a.seed, a.concentration);
  if (!a.trans.empty()) spec.trans = reshape(a.trans, a.states + 1, a.states, "trans");
  if (!a.emit.empty()) spec.emit = reshape(a.emit, a.states, a.symbols, "emit");
  const SyntheticCorpus synth = generate_synthetic(spec);
  save_corpus(synth.corpus, a.out);
  if (!a.vocab_out.empty()) synth.corpus.vocab.save(a.vocab_out);
  if (!a.truth_out.empty()) {
    nlohmann::json truth{{"states", spec.states},       {"symbols", spec.symbols},
                         {"seed", spec.seed},           {"trans", matrix_json(spec.trans)},
                         {"emit", matrix_json(spec.emit)}};
    std::ofstream f(a.truth_out);
    if (!f) throw std::runtime_error("cannot write " + a.truth_out);
    f << truth.dump(2) << '\n';
  }
  out << "generated " << synth.corpus.size() << " sequences, " << synth.corpus.token_count
      << " tokens\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic collapsed variational inference for HMMs and HDP-HMMs"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a corpus");
  auto& c = ta.config;
  train_cmd->add_option("--train", ta.train_path, "Training corpus (one sequence per line)")->required();
  train_cmd->add_option("--test", ta.test_path, "Held-out corpus; default splits --train");
  train_cmd->add_option("--train-fraction", ta.train_fraction, "Training share when splitting")
      ->capture_default_str();
  train_cmd->add_option("--split-seed", ta.split_seed, "Seed for the train/test split")->capture_default_str();
  train_cmd->add_option("--vocab", ta.vocab_path, "Frozen vocabulary file");
  train_cmd->add_option("--oov", ta.oov, "OOV policy for frozen vocabularies")
      ->check(CLI::IsMember({"unk", "error"}))->capture_default_str();
  train_cmd->add_option("--algo", ta.algorithm, "scvi-hmm | scvi-hdphmm | svi-hmm")
      ->check(CLI::IsMember({"scvi-hmm", "scvi-hdphmm", "svi-hmm"}))->capture_default_str();
  train_cmd->add_option("--states", c.states, "Number of states (truncation level for HDP)")
      ->capture_default_str();
  train_cmd->add_option("--kappa", c.kappa, "Forgetting rate")->capture_default_str();
  train_cmd->add_option("--minibatch", c.minibatch, "Sequences per minibatch")->capture_default_str();
  train_cmd->add_option("--large-batch", c.large_batch, "Sequences per HDP update")->capture_default_str();
  train_cmd->add_option("--passes", c.passes, "Passes over the data (0 with no budget: init only)")
      ->capture_default_str();
  train_cmd->add_option("--time-budget", c.time_budget_seconds, "Wall-clock budget in seconds (0 = none)")
      ->capture_default_str();
  train_cmd->add_option("--trans-prior", c.trans_prior, "Symmetric transition pseudo-count")
      ->capture_default_str();
  train_cmd->add_option("--emit-prior", c.emit_prior, "Symmetric emission pseudo-count")->capture_default_str();
  train_cmd->add_option("--alpha-a", c.hdp_priors.alpha.a, "Gamma shape prior on alpha")->capture_default_str();
  train_cmd->add_option("--alpha-b", c.hdp_priors.alpha.b, "Gamma rate prior on alpha")->capture_default_str();
  train_cmd->add_option("--gamma-a", c.hdp_priors.gamma.a, "Gamma shape prior on gamma")->capture_default_str();
  train_cmd->add_option("--gamma-b", c.hdp_priors.gamma.b, "Gamma rate prior on gamma")->capture_default_str();
  train_cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--eval-every", c.eval_every_steps, "Evaluate every N minibatches (0 = per pass)")
      ->capture_default_str();
  train_cmd->add_option("--eval-seconds", c.eval_every_seconds, "Evaluate every S seconds (0 = off)")
      ->capture_default_str();
  train_cmd->add_option("--threads", c.threads, "Worker threads per minibatch")
      ->envname("SCVI_THREADS")->capture_default_str();
  train_cmd->add_option("--sampling", ta.sampling, "shuffle | iid")
      ->check(CLI::IsMember({"shuffle", "iid"}))->capture_default_str();
  train_cmd->add_option("--model-out", ta.model_out, "Output model file")->required();
  train_cmd->add_option("--metrics-out", ta.metrics_out, "Metrics CSV (appended)");
  train_cmd->add_option("--vocab-out", ta.vocab_out, "Write the training vocabulary");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Per-token held-out log likelihood of a model");
  eval_cmd->add_option("--model", ea.model_path, "Model file")->required();
  eval_cmd->add_option("--corpus", ea.corpus_path, "Held-out corpus")->required();
  eval_cmd->add_option("--vocab", ea.vocab_path, "Vocabulary file (default: the model's own)");
  eval_cmd->add_option("--oov", ea.oov, "OOV policy")->check(CLI::IsMember({"unk", "error"}))
      ->capture_default_str();
  eval_cmd->add_option("--metrics-out", ea.metrics_out, "Metrics CSV (appended)");

  GenerateArgs ga;
  auto* gen_cmd = app.add_subcommand("generate", "Sample a corpus from a random or given HMM");
  gen_cmd->add_option("--states", ga.states, "Hidden states")->capture_default_str();
  gen_cmd->add_option("--symbols", ga.symbols, "Observable symbols")->capture_default_str();
  gen_cmd->add_option("--sequences", ga.sequences, "Number of sequences")->capture_default_str();
  gen_cmd->add_option("--min-length", ga.min_length, "Minimum sequence length")->capture_default_str();
  gen_cmd->add_option("--max-length", ga.max_length, "Maximum sequence length")->capture_default_str();
  gen_cmd->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--concentration", ga.concentration, "Dirichlet concentration of random rows")
      ->capture_default_str();
  gen_cmd->add_option("--trans", ga.trans, "Row-major (K+1) x K transition matrix, row 0 = start");
  gen_cmd->add_option("--emit", ga.emit, "Row-major K x V emission matrix");
  gen_cmd->add_option("--out", ga.out, "Output corpus file")->required();
  gen_cmd->add_option("--vocab-out", ga.vocab_out, "Output vocabulary file");
  gen_cmd->add_option("--truth-out", ga.truth_out, "Generating model as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train_cmd) return do_train(ta, out, err);
    if (*eval_cmd) return do_eval(ea, out, err);
    return do_generate(ga, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ModelIoError& e) {
    err << "model file error (code " << static_cast<int>(e.code()) << "): " << e.what() << '\n';
    return kExitModelFile;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace scvi::cli
