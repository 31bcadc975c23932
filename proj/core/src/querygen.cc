#include "veriscope/querygen.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "veriscope/error.h"

namespace veriscope {

IdfTable::IdfTable(std::size_t doc_count,
                   std::unordered_map<std::string, std::size_t> df)
    : doc_count_(doc_count), df_(std::move(df)) {
  if (doc_count_ == 0) ThrowInvalid("idf table needs at least one document");
  for (const auto& [word, count] : df_) {
    if (count < 1 || count > doc_count_) {
      ThrowInvalid("document frequency of '" + word + "' out of range");
    }
  }
}

std::size_t IdfTable::df(std::string_view word) const {
  auto it = df_.find(std::string(word));
  return it == df_.end() ? 0 : it->second;
}

double IdfTable::idf(std::string_view word) const {
  const double n = static_cast<double>(doc_count_);
  return std::log((n + 1.0) / (static_cast<double>(df(word)) + 1.0)) + 1.0;
}

void IdfTable::Save(std::ostream& out) const {
  std::vector<std::pair<std::string, std::size_t>> rows(df_.begin(), df_.end());
  std::sort(rows.begin(), rows.end());
  out << "N=" << doc_count_ << '\n';
  for (const auto& [word, count] : rows) out << word << '\t' << count << '\n';
}

IdfTable IdfTable::Load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0;
  if (!std::getline(in, line)) throw FormatError(1, "missing N= header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("N=", 0) != 0) throw FormatError(1, "missing N= header");
  {
    const char* b = line.data() + 2;
    const char* e = line.data() + line.size();
    auto [p, ec] = std::from_chars(b, e, n);
    if (ec != std::errc() || p != e || n == 0) throw FormatError(1, "bad document count");
  }
  std::unordered_map<std::string, std::size_t> df;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(line_no, "expected token<TAB>df");
    }
    std::size_t count = 0;
    const char* b = line.data() + tab + 1;
    const char* e = line.data() + line.size();
    auto [p, ec] = std::from_chars(b, e, count);
    if (ec != std::errc() || p != e) throw FormatError(line_no, "bad df value");
    if (count < 1 || count > n) throw FormatError(line_no, "df outside [1, N]");
    df.emplace(line.substr(0, tab), count);
  }
  return IdfTable(n, std::move(df));
}

IdfTable IdfTable::LoadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open idf table " + path);
  return Load(in);
}

IdfTable build_idf(std::span<const std::string> documents) {
  if (documents.empty()) ThrowInvalid("build_idf: empty corpus");
  std::unordered_map<std::string, std::size_t> df;
  for (const std::string& doc : documents) {
    std::vector<std::string> words = lower_words(doc);
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    for (std::string& w : words) ++df[std::move(w)];
  }
  return IdfTable(documents.size(), std::move(df));
}

std::string Query::Text() const {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::vector<TermScore> rank_terms(std::string_view claim, const IdfTable& idf,
                                  const Annotator& annotator) {
  const std::vector<Token> all = tokenize(claim);
  const std::vector<Token> content = annotator.ContentTokens(all);

  std::vector<std::string> order;
  std::unordered_map<std::string, int> tf;
  for (const Token& t : content) {
    if (tf[t.lower]++ == 0) order.push_back(t.lower);
  }
  std::vector<TermScore> ranked;
  ranked.reserve(order.size());
  for (const std::string& w : order) {
    ranked.push_back({w, static_cast<double>(tf[w]) * idf.idf(w)});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const TermScore& a, const TermScore& b) {
                     return a.score > b.score;
                   });
  return ranked;
}

std::vector<TermScore> rank_terms(std::string_view claim, const IdfTable& idf) {
  return rank_terms(claim, idf, HeuristicAnnotator());
}

Query generate_query(std::string_view claim, const IdfTable& idf,
                     const Annotator& annotator, std::string claim_id) {
  Query query;
  query.origin_claim_id = std::move(claim_id);
  std::unordered_set<std::string> used;
  auto push = [&](const std::string& word) {
    if (query.tokens.size() >= kMaxQueryTokens) return;
    if (used.insert(word).second) query.tokens.push_back(word);
  };
  for (const EntityPhrase& e : annotator.Entities(claim)) {
    for (const Token& t : e.tokens) push(t.lower);
  }
  for (const TermScore& term : rank_terms(claim, idf, annotator)) push(term.token);
  if (query.tokens.empty()) {
    throw Error(ErrorCode::kEmptyQuery, "claim has no query candidates");
  }
  return query;
}

Query generate_query(std::string_view claim, const IdfTable& idf,
                     std::string claim_id) {
  return generate_query(claim, idf, HeuristicAnnotator(), std::move(claim_id));
}

Query relax(const Query& query) {
  if (query.size() < 2) {
    throw Error(ErrorCode::kCannotRelax, "cannot relax a query of length " +
                                             std::to_string(query.size()));
  }
  Query out = query;
  out.tokens.pop_back();
  return out;
}

}  // namespace veriscope
