#include "veriscope/dataset.h"

#include <fstream>
#include <iomanip>
#include <unordered_set>

#include "json.hpp"
#include "veriscope/error.h"
#include "veriscope/html.h"

namespace veriscope {

using nlohmann::json;

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  ThrowInvalid("unknown split '" + std::string(name) + "'");
}

std::string cqa_build_claim(std::string_view question, std::string_view answer) {
  const std::string q = collapse_whitespace(question);
  const std::string a = collapse_whitespace(answer);
  if (q.empty()) ThrowInvalid("cQA question is empty");
  if (a.empty()) ThrowInvalid("cQA answer is empty");
  return q + " " + a;
}

namespace {

std::string RequireString(const json& obj, const char* field, std::size_t line) {
  const auto it = obj.find(field);
  if (it == obj.end()) throw FormatError(line, std::string("missing field '") + field + "'");
  if (!it->is_string()) throw FormatError(line, std::string("field '") + field + "' is not a string");
  return it->get<std::string>();
}

std::optional<std::string> OptionalString(const json& obj, const char* field, std::size_t line) {
  const auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FormatError(line, std::string("field '") + field + "' is not a string");
  return it->get<std::string>();
}

}  // namespace

std::vector<Example> load_dataset(std::istream& in) {
  std::vector<Example> examples;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw FormatError(line, "expected a JSON object");

    Example ex;
    ex.id = RequireString(obj, "id", line);
    if (ex.id.empty()) throw FormatError(line, "empty id");
    if (!seen.insert(ex.id).second) throw FormatError(line, "duplicate id '" + ex.id + "'");

    const std::string label = RequireString(obj, "label", line);
    if (label != "true" && label != "false") {
      throw FormatError(line, "unknown label '" + label + "'");
    }
    ex.label = ParseLabel(label);

    const std::string split = RequireString(obj, "split", line);
    if (split != "train" && split != "dev" && split != "test") {
      throw FormatError(line, "unknown split '" + split + "'");
    }
    ex.split = ParseSplit(split);

    ex.question = OptionalString(obj, "question", line);
    ex.answer = OptionalString(obj, "answer", line);
    ex.category = OptionalString(obj, "category", line);
    if (ex.question.has_value() != ex.answer.has_value()) {
      throw FormatError(line, "question and answer must appear together");
    }
    const std::optional<std::string> claim = OptionalString(obj, "claim", line);
    if (ex.question) {
      try {
        ex.claim_text = claim ? *claim : cqa_build_claim(*ex.question, *ex.answer);
      } catch (const Error& e) {
        throw FormatError(line, e.what());
      }
    } else {
      if (!claim) throw FormatError(line, "missing field 'claim'");
      ex.claim_text = *claim;
    }
    if (ex.claim_text.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw FormatError(line, "empty claim");
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

std::vector<Example> load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open dataset " + path);
  return load_dataset(in);
}

void write_dataset(std::ostream& out, std::span<const Example> examples) {
  for (const Example& ex : examples) {
    json obj = {{"id", ex.id},
                {"claim", ex.claim_text},
                {"label", LabelName(ex.label)},
                {"split", SplitName(ex.split)}};
    if (ex.question) obj["question"] = *ex.question;
    if (ex.answer) obj["answer"] = *ex.answer;
    if (ex.category) obj["category"] = *ex.category;
    out << obj.dump() << '\n';
  }
}

DatasetStats describe_dataset(std::span<const Example> examples) {
  DatasetStats stats;
  for (const Example& ex : examples) {
    const auto s = static_cast<std::size_t>(ex.split);
    ++stats.split_counts[s];
    ++stats.label_counts[s][LabelIndex(ex.label)];
  }
  return stats;
}

void print_dataset_stats(std::ostream& out, const DatasetStats& stats) {
  for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
    const auto s = static_cast<std::size_t>(split);
    out << std::left << std::setw(6) << SplitName(split) << std::right << std::setw(6)
        << stats.split_counts[s] << "  false " << stats.label_counts[s][0] << "  true "
        << stats.label_counts[s][1] << '\n';
  }
}

}  // namespace veriscope
