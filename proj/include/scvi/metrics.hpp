#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace scvi {

struct MetricRecord {
  std::uint64_t step = 0;
  std::size_t pass = 0;
  double seconds = 0.0;
  double heldout_ll = 0.0;
  std::size_t k_effective = 0;

  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

inline constexpr const char* kMetricsHeader = "step,pass,seconds,heldout_ll,k_effective";

/// Shortest round-trip decimal form of x.
std::string format_real(double x);

std::string format_metric_row(const MetricRecord& r);

/// Appends rows to a CSV file, writing the header when the file is new or empty.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  void write(const MetricRecord& r);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Parses a metrics CSV; throws std::runtime_error on a bad header or row.
std::vector<MetricRecord> read_metrics(const std::filesystem::path& path);

}  // namespace scvi
