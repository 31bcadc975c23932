#ifndef VERISCOPE_METRICS_H_
#define VERISCOPE_METRICS_H_

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "veriscope/label.h"

namespace veriscope {

// Percentages. Precision is absent when nothing was predicted for the class
// (F1 is then 0); recall is absent when the class has no gold examples.
struct ClassMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  double f1 = 0.0;
};

struct MetricsReport {
  std::array<ClassMetrics, 2> per_class;  // by label index: false, true
  double avg_recall = 0.0;  // mean of the defined recalls
  double avg_f1 = 0.0;      // mean of both F1 values
  double accuracy = 0.0;
  std::array<std::array<std::size_t, 2>, 2> confusion{};  // [gold][predicted]
  std::size_t total = 0;
};

MetricsReport compute_metrics(std::span<const Label> gold, std::span<const Label> predicted);

using NamedReport = std::pair<std::string, MetricsReport>;

// Columns: Model | false P R F1 | true P R F1 | AvgR AvgF1 Acc, one decimal,
// "--" for absent values.
void print_metrics_table(std::ostream& out, std::span<const NamedReport> rows);
void write_metrics_csv(std::ostream& out, std::span<const NamedReport> rows);

}  // namespace veriscope

#endif  // VERISCOPE_METRICS_H_
