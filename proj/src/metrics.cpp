#include "scvi/metrics.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace scvi {

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string format_metric_row(const MetricRecord& r) {
  return std::to_string(r.step) + ',' + std::to_string(r.pass) + ',' + format_real(r.seconds) +
         ',' + format_real(r.heldout_ll) + ',' + std::to_string(r.k_effective);
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : path_(path) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open metrics file " + path.string());
  if (fresh) out_ << kMetricsHeader << '\n';
}

void MetricsWriter::write(const MetricRecord& r) {
  out_ << format_metric_row(r) << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("error writing metrics file " + path_.string());
}

namespace {

template <class T>
T parse_field(const std::string& field, std::size_t lineno) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw std::runtime_error("metrics line " + std::to_string(lineno) + ": bad field '" + field + "'");
  }
  return value;
}

}  // namespace

std::vector<MetricRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("metrics file " + path.string() + " has a bad header");
  }
  std::vector<MetricRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 5) {
      throw std::runtime_error("metrics line " + std::to_string(lineno) + ": expected 5 fields");
    }
    MetricRecord r;
    r.step = parse_field<std::uint64_t>(fields[0], lineno);
    r.pass = parse_field<std::size_t>(fields[1], lineno);
    r.seconds = parse_field<double>(fields[2], lineno);
    r.heldout_ll = parse_field<double>(fields[3], lineno);
    r.k_effective = parse_field<std::size_t>(fields[4], lineno);
    out.push_back(r);
  }
  return out;
}

}  // namespace scvi
