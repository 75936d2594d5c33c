#include "scvi/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace scvi {

Vocabulary::Vocabulary() { add(kUnkWord); }

Token Vocabulary::add(std::string_view word) {
  std::string key(word);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const auto idx = static_cast<Token>(words_.size());
  words_.push_back(key);
  index_.emplace(std::move(key), idx);
  return idx;
}

std::optional<Token> Vocabulary::find(std::string_view word) const {
  if (auto it = index_.find(std::string(word)); it != index_.end()) return it->second;
  return std::nullopt;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == kUnkWord || vocab.find(line)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": empty, reserved or duplicate vocabulary entry");
    }
    vocab.add(line);
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file " + path.string());
  for (std::size_t i = 1; i < words_.size(); ++i) out << words_[i] << '\n';
  if (!out) throw std::runtime_error("error writing vocabulary file " + path.string());
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  if (words.empty() || words.front() != kUnkWord) {
    throw std::runtime_error("vocabulary word list must start with " + std::string(kUnkWord));
  }
  Vocabulary vocab;
  for (std::size_t i = 1; i < words.size(); ++i) {
    if (vocab.find(words[i])) throw std::runtime_error("duplicate vocabulary word " + words[i]);
    vocab.add(words[i]);
  }
  return vocab;
}

Corpus read_corpus(std::istream& in, std::string_view source_name,
                   const std::optional<Vocabulary>& frozen, OovPolicy oov) {
  Corpus corpus;
  if (frozen) corpus.vocab = *frozen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream words(line);
    Sequence seq;
    std::string w;
    while (words >> w) {
      if (!frozen) {
        seq.push_back(corpus.vocab.add(w));
        continue;
      }
      if (auto idx = corpus.vocab.find(w)) {
        seq.push_back(*idx);
      } else if (oov == OovPolicy::MapToUnk) {
        seq.push_back(kUnkIndex);
      } else {
        throw std::runtime_error(std::string(source_name) + ":" + std::to_string(lineno) +
                                 ": token '" + w + "' not in vocabulary");
      }
    }
    if (seq.empty()) {
      ++corpus.skipped_lines;
      continue;
    }
    corpus.token_count += seq.size();
    corpus.sequences.push_back(std::move(seq));
  }
  if (in.bad()) throw std::runtime_error("error reading " + std::string(source_name));
  if (corpus.sequences.empty()) {
    throw std::runtime_error(std::string(source_name) + ": no sequences");
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const std::optional<Vocabulary>& frozen,
                   OovPolicy oov) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file " + path.string());
  return read_corpus(in, path.string(), frozen, oov);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file " + path.string());
  for (const auto& seq : corpus.sequences) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      if (t) out << ' ';
      out << corpus.vocab.word(seq[t]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("error writing corpus file " + path.string());
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must lie in (0, 1)");
  }
  const std::size_t n = corpus.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) {
    throw std::invalid_argument("split: fraction " + std::to_string(train_fraction) + " of " +
                                std::to_string(n) + " sequences leaves one side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::pair<Corpus, Corpus> out;
  out.first.vocab = corpus.vocab;
  out.second.vocab = corpus.vocab;
  for (std::size_t i = 0; i < n; ++i) {
    Corpus& side = i < n_train ? out.first : out.second;
    const auto& seq = corpus.sequences[order[i]];
    side.token_count += seq.size();
    side.sequences.push_back(seq);
  }
  return out;
}

namespace {

void check_stochastic(const Matrix& m, const char* what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (double x : m.row(r)) {
      if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative entry");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw std::invalid_argument(std::string(what) + " row " + std::to_string(r) +
                                  " does not sum to 1");
    }
  }
}

}  // namespace

void SyntheticSpec::validate() const {
  if (states == 0 || symbols == 0) throw std::invalid_argument("synthetic spec: K and V must be >= 1");
  if (trans.rows() != states + 1 || trans.cols() != states) {
    throw std::invalid_argument("synthetic spec: transition matrix must be (K+1) x K");
  }
  if (emit.rows() != states || emit.cols() != symbols) {
    throw std::invalid_argument("synthetic spec: emission matrix must be K x V");
  }
  if (sequences == 0 || min_length == 0 || min_length > max_length) {
    throw std::invalid_argument("synthetic spec: need sequences >= 1 and 1 <= min_length <= max_length");
  }
  check_stochastic(trans, "synthetic transition");
  check_stochastic(emit, "synthetic emission");
}

SyntheticSpec random_synthetic_spec(std::size_t states, std::size_t symbols,
                                    std::size_t sequences, std::size_t min_length,
                                    std::size_t max_length, std::uint64_t seed,
                                    double concentration) {
  SyntheticSpec spec;
  spec.states = states;
  spec.symbols = symbols;
  spec.sequences = sequences;
  spec.min_length = min_length;
  spec.max_length = max_length;
  spec.seed = seed;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::gamma_distribution<double> draw(concentration, 1.0);
  auto fill_rows = [&](Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double s = 0.0;
      for (double& x : m.row(r)) s += (x = draw(rng) + 1e-12);
      for (double& x : m.row(r)) x /= s;
    }
  };
  spec.trans = Matrix(states + 1, states);
  spec.emit = Matrix(states, symbols);
  fill_rows(spec.trans);
  fill_rows(spec.emit);
  return spec;
}

ChainWeights SyntheticCorpus::truth_weights() const {
  Matrix emit(truth.states, truth.symbols + 1, 0.0);
  for (std::size_t k = 0; k < truth.states; ++k) {
    for (std::size_t s = 0; s < truth.symbols; ++s) emit(k, s + 1) = truth.emit(k, s);
  }
  return ChainWeights(truth.trans, emit);
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticCorpus out;
  out.truth = spec;
  for (std::size_t s = 0; s < spec.symbols; ++s) out.corpus.vocab.add("w" + std::to_string(s));

  std::mt19937_64 rng(spec.seed);
  auto row_dist = [](const Matrix& m, std::size_t r) {
    const auto row = m.row(r);
    return std::discrete_distribution<std::size_t>(row.begin(), row.end());
  };
  std::vector<std::discrete_distribution<std::size_t>> trans_d, emit_d;
  for (std::size_t r = 0; r <= spec.states; ++r) trans_d.push_back(row_dist(spec.trans, r));
  for (std::size_t k = 0; k < spec.states; ++k) emit_d.push_back(row_dist(spec.emit, k));
  std::uniform_int_distribution<std::size_t> length_d(spec.min_length, spec.max_length);

  out.corpus.sequences.reserve(spec.sequences);
  for (std::size_t n = 0; n < spec.sequences; ++n) {
    const std::size_t T = length_d(rng);
    Sequence seq(T);
    std::size_t from = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t state = trans_d[from](rng);
      seq[t] = static_cast<Token>(emit_d[state](rng) + 1);
      from = state + 1;
    }
    out.corpus.token_count += T;
    out.corpus.sequences.push_back(std::move(seq));
  }
  return out;
}

MinibatchSampler::MinibatchSampler(std::size_t corpus_size, std::size_t batch_size,
                                   std::uint64_t seed, SamplingMode mode)
    : n_(corpus_size), m_(batch_size), mode_(mode), order_(corpus_size), rng_(seed) {
  if (n_ == 0) throw std::invalid_argument("minibatch sampler: empty corpus");
  if (m_ == 0) throw std::invalid_argument("minibatch sampler: batch size must be >= 1");
  std::iota(order_.begin(), order_.end(), 0);
}

std::size_t MinibatchSampler::batches_per_pass() const noexcept { return (n_ + m_ - 1) / m_; }

std::vector<std::vector<std::size_t>> MinibatchSampler::next_pass() {
  std::vector<std::vector<std::size_t>> batches;
  batches.reserve(batches_per_pass());
  if (mode_ == SamplingMode::Shuffle) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    for (std::size_t start = 0; start < n_; start += m_) {
      const std::size_t stop = std::min(n_, start + m_);
      batches.emplace_back(order_.begin() + static_cast<std::ptrdiff_t>(start),
                           order_.begin() + static_cast<std::ptrdiff_t>(stop));
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    for (std::size_t b = 0; b < batches_per_pass(); ++b) {
      std::vector<std::size_t> batch(m_);
      for (auto& i : batch) i = pick(rng_);
      batches.push_back(std::move(batch));
    }
  }
  return batches;
}

}  // namespace scvi
