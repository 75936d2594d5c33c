#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scvi/matrix.hpp"
#include "scvi/messages.hpp"

namespace scvi {

inline constexpr Token kUnkIndex = 0;
inline constexpr std::string_view kUnkWord = "<unk>";

/// Bidirectional word/index map. Index 0 is always the UNK token.
class Vocabulary {
 public:
  Vocabulary();

  /// Index of word, inserting it if absent.
  Token add(std::string_view word);
  [[nodiscard]] std::optional<Token> find(std::string_view word) const;
  [[nodiscard]] const std::string& word(Token index) const { return words_.at(index); }
  [[nodiscard]] std::size_t size() const noexcept { return words_.size(); }
  /// All words including UNK at index 0.
  [[nodiscard]] const std::vector<std::string>& words() const noexcept { return words_; }

  /// One word per line; line i holds index i + 1. UNK is implicit.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  /// Rebuilds from the full word list (UNK first), as stored in model files.
  static Vocabulary from_words(std::vector<std::string> words);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, Token> index_;
};

enum class OovPolicy { MapToUnk, Error };

struct Corpus {
  std::vector<Sequence> sequences;
  Vocabulary vocab;
  std::size_t token_count = 0;
  std::size_t skipped_lines = 0;

  [[nodiscard]] std::size_t size() const noexcept { return sequences.size(); }
};

/// Reads one sequence per line with whitespace-separated tokens. With no
/// frozen vocabulary the vocabulary grows as words are seen. Empty lines are
/// skipped and counted. Throws std::runtime_error on I/O failure, an empty
/// result, or an OOV token under OovPolicy::Error.
Corpus load_corpus(const std::filesystem::path& path,
                   const std::optional<Vocabulary>& frozen = std::nullopt,
                   OovPolicy oov = OovPolicy::MapToUnk);
Corpus read_corpus(std::istream& in, std::string_view source_name,
                   const std::optional<Vocabulary>& frozen = std::nullopt,
                   OovPolicy oov = OovPolicy::MapToUnk);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Deterministic shuffled split; both sides share the vocabulary.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_fraction, std::uint64_t seed);

/// Generating HMM for synthetic corpora, over V observable symbols.
struct SyntheticSpec {
  std::size_t states = 3;
  std::size_t symbols = 20;
  Matrix trans;  // (K+1) x K
  Matrix emit;   // K x symbols
  std::size_t sequences = 100;
  std::size_t min_length = 10;
  std::size_t max_length = 30;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Draws a random generating HMM with Dirichlet(concentration) rows.
SyntheticSpec random_synthetic_spec(std::size_t states, std::size_t symbols,
                                    std::size_t sequences, std::size_t min_length,
                                    std::size_t max_length, std::uint64_t seed,
                                    double concentration = 0.5);

struct SyntheticCorpus {
  Corpus corpus;
  SyntheticSpec truth;

  /// The generating chain over the corpus vocabulary (UNK column weight 0).
  [[nodiscard]] ChainWeights truth_weights() const;
};

/// Symbol s is written as "w<s>" and has vocabulary index s + 1.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

enum class SamplingMode { Shuffle, Iid };

/// Sequence-index batches. Shuffle mode chunks a fresh permutation per pass
/// (final batch may be short); Iid mode draws ceil(N/M) batches of M uniform
/// indices per pass.
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t corpus_size, std::size_t batch_size, std::uint64_t seed,
                   SamplingMode mode = SamplingMode::Shuffle);

  std::vector<std::vector<std::size_t>> next_pass();
  [[nodiscard]] std::size_t batches_per_pass() const noexcept;

 private:
  std::size_t n_;
  std::size_t m_;
  SamplingMode mode_;
  std::vector<std::size_t> order_;
  std::mt19937_64 rng_;
};

}  // namespace scvi
