#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flsched/simulator.hpp"

namespace flsched {

// One metrics.csv data row. Column order:
// run_id,policy,seed,round,accuracy,loss,v,n_reliable,n_selected,mean_aou,max_aou
struct MetricsRow {
  std::size_t run_id = 0;
  std::string policy;
  std::uint64_t seed = 0;
  std::size_t round = 0;
  double accuracy = 0.0;
  double loss = 0.0;
  double v = 0.0;
  std::size_t n_reliable = 0;
  std::size_t n_selected = 0;
  double mean_aou = 0.0;
  double max_aou = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

inline constexpr const char* kMetricsHeader =
    "run_id,policy,seed,round,accuracy,loss,v,n_reliable,n_selected,mean_aou,max_aou";

// Shortest text that parses back to the same double.
std::string format_double(double value);

std::vector<MetricsRow> metrics_rows(std::span<const RunResult> runs);

// LF line endings, '.' decimal separator, header always present.
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);

// Throws FormatError naming the 1-based line of the first malformed row.
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

// run_id,policy,seed,round,client,selected,aou,shapley_score
void write_client_dump(std::ostream& out, std::span<const RunResult> runs);

// Accuracy vs round, one polyline per policy (mean over runs) with a
// min-max band. Deterministic for identical input.
std::string render_convergence_svg(std::span<const MetricsRow> rows);

}  // namespace flsched
