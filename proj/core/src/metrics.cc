#include "veriscope/metrics.h"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "veriscope/error.h"

namespace veriscope {

MetricsReport compute_metrics(std::span<const Label> gold, std::span<const Label> predicted) {
  if (gold.size() != predicted.size()) ThrowInvalid("gold and predicted lengths differ");
  if (gold.empty()) ThrowInvalid("metrics need at least one example");

  MetricsReport r;
  r.total = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++r.confusion[LabelIndex(gold[i])][LabelIndex(predicted[i])];
  }

  double recall_sum = 0.0;
  int recalls = 0;
  double f1_sum = 0.0;
  for (int c = 0; c < 2; ++c) {
    const double tp = static_cast<double>(r.confusion[c][c]);
    const double predicted_c = static_cast<double>(r.confusion[0][c] + r.confusion[1][c]);
    const double gold_c = static_cast<double>(r.confusion[c][0] + r.confusion[c][1]);
    ClassMetrics& m = r.per_class[c];
    if (predicted_c > 0) m.precision = 100.0 * tp / predicted_c;
    if (gold_c > 0) m.recall = 100.0 * tp / gold_c;
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
      m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    }
    if (m.recall) {
      recall_sum += *m.recall;
      ++recalls;
    }
    f1_sum += m.f1;
  }
  r.avg_recall = recalls ? recall_sum / recalls : 0.0;
  r.avg_f1 = f1_sum / 2.0;
  r.accuracy = 100.0 * static_cast<double>(r.confusion[0][0] + r.confusion[1][1]) /
               static_cast<double>(r.total);
  return r;
}

namespace {

std::string Cell(std::optional<double> v) {
  if (!v) return "--";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *v);
  return buf;
}

std::vector<std::string> Cells(const MetricsReport& r) {
  std::vector<std::string> cells;
  for (const ClassMetrics& m : r.per_class) {
    cells.push_back(Cell(m.precision));
    cells.push_back(Cell(m.recall));
    cells.push_back(Cell(m.f1));
  }
  cells.push_back(Cell(r.avg_recall));
  cells.push_back(Cell(r.avg_f1));
  cells.push_back(Cell(r.accuracy));
  return cells;
}

}  // namespace

void print_metrics_table(std::ostream& out, std::span<const NamedReport> rows) {
  std::size_t name_width = 5;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());
  const int w = 7;
  out << std::left << std::setw(static_cast<int>(name_width)) << "" << " |"
      << std::setw(3 * w) << "  False Claims" << " |" << std::setw(3 * w) << "  True Claims"
      << " |  Overall\n";
  out << std::setw(static_cast<int>(name_width)) << "Model" << " |" << std::right;
  for (const char* h : {"P", "R", "F1"}) out << std::setw(w) << h;
  out << " |";
  for (const char* h : {"P", "R", "F1"}) out << std::setw(w) << h;
  out << " |";
  for (const char* h : {"AvgR", "AvgF1", "Acc"}) out << std::setw(w) << h;
  out << '\n';
  out << std::string(name_width + 2 + 3 * w + 2 + 3 * w + 2 + 3 * w, '-') << '\n';
  for (const auto& [name, report] : rows) {
    const auto cells = Cells(report);
    out << std::left << std::setw(static_cast<int>(name_width)) << name << " |" << std::right;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == 3 || i == 6) out << " |";
      out << std::setw(w) << cells[i];
    }
    out << '\n';
  }
}

void write_metrics_csv(std::ostream& out, std::span<const NamedReport> rows) {
  out << "model,false_p,false_r,false_f1,true_p,true_r,true_f1,avg_r,avg_f1,acc\n";
  for (const auto& [name, report] : rows) {
    out << name;
    for (const std::string& cell : Cells(report)) out << ',' << cell;
    out << '\n';
  }
}

}  // namespace veriscope
