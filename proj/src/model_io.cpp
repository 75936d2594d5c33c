#include "scvi/model_io.hpp"

#include <algorithm>
#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace scvi {

static_assert(std::endian::native == std::endian::little,
              "model files are written in host byte order, which must be little-endian");

namespace {

constexpr char kMagic[8] = {'S', 'C', 'V', 'I', 'M', 'O', 'D', 'L'};
constexpr std::size_t kPreamble = sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t);

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(0L, data, static_cast<uInt>(n)));
}

class Writer {
 public:
  template <class T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_matrix(const Matrix& m) {
    put<std::uint64_t>(m.rows());
    put<std::uint64_t>(m.cols());
    for (double x : m.flat()) put(x);
  }
  void put_vector(const std::vector<double>& v) {
    put<std::uint64_t>(v.size());
    for (double x : v) put(x);
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : p_(data), end_(data + size) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, p_, sizeof(T));
    p_ += sizeof(T);
    return value;
  }
  Matrix get_matrix(std::size_t rows, std::size_t cols) {
    const auto r = get<std::uint64_t>();
    const auto c = get<std::uint64_t>();
    if (r != rows || c != cols) malformed("matrix dimensions disagree with header");
    Matrix m(rows, cols);
    for (double& x : m.flat()) x = get<double>();
    return m;
  }
  std::vector<double> get_vector(std::size_t n) {
    if (get<std::uint64_t>() != n) malformed("vector length disagrees with header");
    std::vector<double> v(n);
    for (double& x : v) x = get<double>();
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(p_), n);
    p_ += n;
    return s;
  }
  [[nodiscard]] bool done() const noexcept { return p_ == end_; }
  [[noreturn]] static void malformed(const std::string& what) {
    throw ModelIoError(ModelIoErrc::Malformed, "malformed model file: " + what);
  }

 private:
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) malformed("record runs past end of body");
  }
  const std::uint8_t* p_;
  const std::uint8_t* end_;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model) {
  Writer body;
  const std::size_t K = model.states();
  const std::size_t V = model.vocab_size();
  body.put(static_cast<std::uint32_t>(model.algorithm));
  body.put<std::uint64_t>(K);
  body.put<std::uint64_t>(V);
  body.put<std::uint64_t>(model.corpus_size);
  body.put(model.schedule.kappa);
  body.put<std::uint64_t>(model.schedule.step);
  body.put<std::uint64_t>(model.schedule.hdp_step);
  body.put<std::uint64_t>(model.schedule.minibatch);
  body.put<std::uint64_t>(model.schedule.large_batch);
  body.put(model.trans_prior);
  body.put(model.emit_prior);
  body.put(model.hdp_priors.alpha.a);
  body.put(model.hdp_priors.alpha.b);
  body.put(model.hdp_priors.gamma.a);
  body.put(model.hdp_priors.gamma.b);

  if (model.vocab.size() != V) throw std::invalid_argument("model vocabulary size disagrees with parameters");
  body.put<std::uint64_t>(model.vocab.size());
  for (const auto& w : model.vocab.words()) body.put_string(w);

  if (const auto* s = std::get_if<ScviState>(&model.state)) {
    body.put_matrix(s->stats.trans);
    body.put_matrix(s->stats.emission.expected_t);
    body.put_vector(s->stats.emission.expected_count);
    if (const auto* hdp = std::get_if<HdpHmm>(&s->mode)) {
      const auto& post = hdp->posterior;
      body.put<std::uint8_t>(post.pinned ? 1 : 0);
      for (const auto& stick : post.sticks) {
        body.put(stick.u);
        body.put(stick.v);
      }
      body.put(post.alpha.a);
      body.put(post.alpha.b);
      body.put(post.gamma.a);
      body.put(post.gamma.b);
      body.put_vector(post.geo_alpha_pi);
    } else if (model.algorithm != Algorithm::ScviHmm) {
      throw std::invalid_argument("model algorithm tag disagrees with its state");
    }
  } else {
    const auto& rows = std::get<SviState>(model.state).rows;
    body.put_matrix(rows.trans);
    body.put_matrix(rows.emit);
  }

  Writer out;
  out.bytes.insert(out.bytes.end(), std::begin(kMagic), std::end(kMagic));
  out.put(kModelFormatVersion);
  out.put<std::uint64_t>(body.bytes.size());
  out.bytes.insert(out.bytes.end(), body.bytes.begin(), body.bytes.end());
  out.put(crc32_of(out.bytes.data(), out.bytes.size()));
  return out.bytes;
}

Model deserialize_model(const std::vector<std::uint8_t>& bytes) {
  const std::size_t seen = std::min(bytes.size(), sizeof(kMagic));
  if (std::memcmp(bytes.data(), kMagic, seen) != 0) {
    throw ModelIoError(ModelIoErrc::BadMagic, "not a model file (bad magic bytes)");
  }
  if (bytes.size() < kPreamble) throw ModelIoError(ModelIoErrc::Truncated, "model file truncated in header");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
  if (version != kModelFormatVersion) {
    throw ModelIoError(ModelIoErrc::VersionMismatch,
                       "model format version " + std::to_string(version) + ", expected " +
                           std::to_string(kModelFormatVersion));
  }
  std::uint64_t body_len;
  std::memcpy(&body_len, bytes.data() + sizeof(kMagic) + sizeof(version), sizeof(body_len));
  if (body_len > bytes.size() || bytes.size() - kPreamble < body_len + sizeof(std::uint32_t)) {
    throw ModelIoError(ModelIoErrc::Truncated, "model file truncated: body shorter than declared");
  }
  const std::size_t covered = kPreamble + body_len;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + covered, sizeof(stored));
  if (stored != crc32_of(bytes.data(), covered)) {
    throw ModelIoError(ModelIoErrc::ChecksumMismatch, "model file checksum mismatch");
  }
  if (covered + sizeof(stored) != bytes.size()) Reader::malformed("trailing bytes after checksum");

  Reader in(bytes.data() + kPreamble, body_len);
  Model model;
  const auto tag = in.get<std::uint32_t>();
  if (tag > static_cast<std::uint32_t>(Algorithm::SviHmm)) Reader::malformed("unknown algorithm tag");
  model.algorithm = static_cast<Algorithm>(tag);
  const auto K = static_cast<std::size_t>(in.get<std::uint64_t>());
  const auto V = static_cast<std::size_t>(in.get<std::uint64_t>());
  if (K == 0 || V == 0) Reader::malformed("zero dimension");
  model.corpus_size = in.get<std::uint64_t>();
  model.schedule.kappa = in.get<double>();
  model.schedule.step = in.get<std::uint64_t>();
  model.schedule.hdp_step = in.get<std::uint64_t>();
  model.schedule.minibatch = in.get<std::uint64_t>();
  model.schedule.large_batch = in.get<std::uint64_t>();
  model.trans_prior = in.get<double>();
  model.emit_prior = in.get<double>();
  model.hdp_priors.alpha.a = in.get<double>();
  model.hdp_priors.alpha.b = in.get<double>();
  model.hdp_priors.gamma.a = in.get<double>();
  model.hdp_priors.gamma.b = in.get<double>();

  const auto words = in.get<std::uint64_t>();
  if (words != V) Reader::malformed("vocabulary size disagrees with header");
  std::vector<std::string> vocab;
  vocab.reserve(V);
  for (std::size_t i = 0; i < V; ++i) vocab.push_back(in.get_string());
  try {
    model.vocab = Vocabulary::from_words(std::move(vocab));
  } catch (const std::runtime_error& e) {
    Reader::malformed(e.what());
  }

  if (model.algorithm == Algorithm::SviHmm) {
    DirichletRows rows{in.get_matrix(K + 1, K), in.get_matrix(K, V)};
    model.state = SviState{std::move(rows)};
  } else {
    GlobalStats stats;
    stats.trans = in.get_matrix(K + 1, K);
    stats.emission.expected_t = in.get_matrix(K, V);
    stats.emission.expected_count = in.get_vector(K);
    if (model.algorithm == Algorithm::ScviHdpHmm) {
      HdpPosterior post;
      post.pinned = in.get<std::uint8_t>() != 0;
      post.sticks.resize(K);
      for (auto& stick : post.sticks) {
        stick.u = in.get<double>();
        stick.v = in.get<double>();
      }
      post.alpha.a = in.get<double>();
      post.alpha.b = in.get<double>();
      post.gamma.a = in.get<double>();
      post.gamma.b = in.get<double>();
      post.geo_alpha_pi = in.get_vector(K);
      model.state = ScviState{std::move(stats), HdpHmm{std::move(post), model.hdp_priors}};
    } else {
      model.state = ScviState{std::move(stats), FiniteHmm{model.trans_prior}};
    }
  }
  if (!in.done()) Reader::malformed("unexpected bytes at end of body");
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelIoError(ModelIoErrc::Io, "cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelIoError(ModelIoErrc::Io, "error writing model file " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIoError(ModelIoErrc::Io, "cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw ModelIoError(ModelIoErrc::Io, "error reading model file " + path.string());
  return deserialize_model(bytes);
}

}  // namespace scvi
