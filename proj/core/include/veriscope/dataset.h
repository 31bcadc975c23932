#ifndef VERISCOPE_DATASET_H_
#define VERISCOPE_DATASET_H_

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veriscope/label.h"

namespace veriscope {

enum class Split { kTrain = 0, kDev = 1, kTest = 2 };

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

struct Example {
  std::string id;
  std::string claim_text;  // for cQA, built from question and answer
  Label label = Label::kFalse;
  Split split = Split::kTrain;
  std::optional<std::string> question;
  std::optional<std::string> answer;
  std::optional<std::string> category;

  bool is_cqa() const { return question.has_value(); }
};

// Question, a space, then the answer, with runs of whitespace collapsed.
// Throws kInvalidArgument when either side is blank.
std::string cqa_build_claim(std::string_view question, std::string_view answer);

// One JSON object per line: id, label, split, and either claim or
// question + answer (claim then defaults to cqa_build_claim). Blank lines are
// skipped. Throws FormatError naming the line for malformed JSON, missing or
// mistyped fields, unknown labels or splits, and duplicate ids.
std::vector<Example> load_dataset(std::istream& in);
std::vector<Example> load_dataset_file(const std::string& path);

void write_dataset(std::ostream& out, std::span<const Example> examples);

struct DatasetStats {
  std::array<std::size_t, 3> split_counts{};     // by Split
  std::array<std::array<std::size_t, 2>, 3> label_counts{};  // [split][label index]
};

DatasetStats describe_dataset(std::span<const Example> examples);
void print_dataset_stats(std::ostream& out, const DatasetStats& stats);

}  // namespace veriscope

#endif  // VERISCOPE_DATASET_H_
