#include "veriscope/embed.h"

#include <cctype>
#include <charconv>
#include <fstream>

#include "veriscope/error.h"

namespace veriscope {

namespace {

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t b = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > b) fields.push_back(line.substr(b, i - b));
  }
  return fields;
}

bool ParseDouble(std::string_view s, double* out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, *out);
  return ec == std::errc() && ptr == end;
}

bool IsInteger(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

std::span<const double> EmbeddingTable::Lookup(std::string_view word) const {
  const int i = IndexOf(word);
  if (i < 0) return {};
  return Row(static_cast<std::size_t>(i));
}

int EmbeddingTable::IndexOf(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? -1 : static_cast<int>(it->second);
}

bool EmbeddingTable::Add(std::string word, std::span<const double> vector) {
  if (dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_) ThrowInvalid("embedding width mismatch");
  if (index_.count(word)) return false;
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  values_.insert(values_.end(), vector.begin(), vector.end());
  return true;
}

EmbeddingTable load_embeddings(std::istream& in, std::string source_name) {
  EmbeddingTable table;
  table.source_name_ = std::move(source_name);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = SplitFields(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && IsInteger(fields[0]) &&
        IsInteger(fields[1])) {
      continue;
    }
    if (fields.size() < 2) throw FormatError(line_no, "expected a token and values");
    const std::size_t width = fields.size() - 1;
    if (table.dim_ != 0 && width != table.dim_) {
      throw FormatError(line_no, "expected " + std::to_string(table.dim_) +
                                     " values, found " + std::to_string(width));
    }
    row.resize(width);
    for (std::size_t k = 0; k < width; ++k) {
      if (!ParseDouble(fields[k + 1], &row[k])) {
        throw FormatError(line_no, "bad number '" + std::string(fields[k + 1]) + "'");
      }
    }
    table.Add(std::string(fields[0]), row);
  }
  if (table.size() == 0) throw FormatError(line_no, "no embedding rows");
  return table;
}

EmbeddingTable load_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open embeddings " + path);
  return load_embeddings(in, path);
}

TextEmbedding avg_embedding(std::span<const Token> tokens,
                            const EmbeddingTable& table) {
  TextEmbedding out;
  out.vector.assign(table.dimension(), 0.0);
  std::size_t hits = 0;
  for (const Token& t : tokens) {
    auto v = table.Lookup(t.lower);
    if (v.empty()) continue;
    for (std::size_t k = 0; k < v.size(); ++k) out.vector[k] += v[k];
    ++hits;
  }
  if (hits > 0) {
    for (double& x : out.vector) x /= static_cast<double>(hits);
  }
  out.coverage = tokens.empty() ? 0.0
                                : static_cast<double>(hits) /
                                      static_cast<double>(tokens.size());
  return out;
}

}  // namespace veriscope
