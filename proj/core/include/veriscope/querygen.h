#ifndef VERISCOPE_QUERYGEN_H_
#define VERISCOPE_QUERYGEN_H_

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "veriscope/text.h"

namespace veriscope {

// Document frequencies over a reference corpus.
class IdfTable {
 public:
  IdfTable() = default;
  IdfTable(std::size_t doc_count, std::unordered_map<std::string, std::size_t> df);

  std::size_t doc_count() const { return doc_count_; }
  std::size_t df(std::string_view word) const;
  const std::unordered_map<std::string, std::size_t>& frequencies() const {
    return df_;
  }

  // ln((N + 1) / (df + 1)) + 1; unseen words have df = 0.
  double idf(std::string_view word) const;

  // `N=<int>` header then `token<TAB>df` lines, sorted by token.
  void Save(std::ostream& out) const;
  static IdfTable Load(std::istream& in);
  static IdfTable LoadFile(const std::string& path);

 private:
  std::size_t doc_count_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

IdfTable build_idf(std::span<const std::string> documents);

struct Query {
  std::vector<std::string> tokens;
  std::string origin_claim_id;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  // Tokens joined by single spaces.
  std::string Text() const;

  friend bool operator==(const Query&, const Query&) = default;
};

struct TermScore {
  std::string token;
  double score = 0.0;
};

inline constexpr std::size_t kMinQueryTokens = 5;
inline constexpr std::size_t kMaxQueryTokens = 10;

// tf x idf over the claim's content words, highest first; ties keep the order
// of first occurrence in the claim.
std::vector<TermScore> rank_terms(std::string_view claim, const IdfTable& idf,
                                  const Annotator& annotator);
std::vector<TermScore> rank_terms(std::string_view claim, const IdfTable& idf);

// Entity tokens first, then ranked terms, capped at ten tokens. Throws
// kEmptyQuery when the claim yields no candidate token.
Query generate_query(std::string_view claim, const IdfTable& idf,
                     const Annotator& annotator, std::string claim_id = "");
Query generate_query(std::string_view claim, const IdfTable& idf,
                     std::string claim_id = "");

// Drops the last token. Throws kCannotRelax on a one-token query.
Query relax(const Query& query);

}  // namespace veriscope

#endif  // VERISCOPE_QUERYGEN_H_
