#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dddm/tensor.hpp"

namespace dddm {

// Writes to path + ".tmp" then renames over path.
void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

std::string fmt_double(double v);  // shortest round-trip form
double parse_double(const std::string& s, const std::string& where);
std::size_t parse_index(const std::string& s, const std::string& where);

// Leading '#' lines are kept as comments; the first other line is the header.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;  // UsageError if absent
};
CsvTable parse_csv(const std::string& text, const std::string& origin);
CsvTable read_csv(const std::string& path);

struct MetricsRow {
  std::size_t epoch = 0;
  double l_diff = 0.0, l_rec = 0.0, l_total = 0.0, lr = 0.0, wall_time = 0.0;
};
std::string metrics_csv(const std::vector<MetricsRow>& rows, const std::string& config_hash, std::uint64_t seed);

// One converted vector with the labels the oracle classifiers need.
struct SampleRow {
  std::size_t source_index = 0;
  std::size_t source_style = 0;
  std::size_t target_style = 0;
  std::size_t token = 0;
  std::size_t pred_style = 0;
  std::size_t pred_token = 0;
  std::vector<double> x;
};
std::string samples_csv(const std::vector<SampleRow>& rows, const std::string& config_hash, std::uint64_t seed);
std::vector<SampleRow> read_samples(const std::string& path);

}  // namespace dddm
