#ifndef VERISCOPE_FEATURES_H_
#define VERISCOPE_FEATURES_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "veriscope/embed.h"
#include "veriscope/label.h"
#include "veriscope/querygen.h"
#include "veriscope/retrieve.h"

namespace veriscope {

struct SimilarityContext {
  const IdfTable* idf = nullptr;
  const EmbeddingTable* table = nullptr;
};

// Precomputed views of one text, so a claim is tokenized once and compared
// against many snippets and windows.
struct TextProfile {
  std::vector<Token> tokens;
  std::vector<std::pair<std::string, double>> tfidf;  // sorted by word, L2-normalized
  std::vector<double> embedding;
  double embedding_norm = 0.0;
  std::set<std::string> trigrams;  // with the unigram fallback
  std::set<std::string> unigrams;
};

TextProfile make_profile(std::string_view text, const SimilarityContext& ctx);
TextProfile make_profile(std::vector<Token> tokens, const SimilarityContext& ctx);

struct SimilarityTriple {
  double tfidf_cos = 0.0;    // [0, 1]
  double emb_cos = 0.0;      // [-1, 1]
  double containment = 0.0;  // [0, 1]

  // Mean of the three with emb_cos rescaled to [0, 1].
  double SelectionScore() const;
};

double tfidf_cosine(const TextProfile& a, const TextProfile& b);
double embedding_cosine(const TextProfile& a, const TextProfile& b);
// Share of the claim-side n-grams that also occur in b; n is 3, or 1 when
// the claim side has fewer than three tokens.
double containment(const TextProfile& claim, const TextProfile& b);
SimilarityTriple compare(const TextProfile& claim, const TextProfile& other);

double tfidf_cosine(std::string_view a, std::string_view b, const IdfTable& idf);
double embedding_cosine(std::string_view a, std::string_view b, const EmbeddingTable& table);
double containment(std::string_view a, std::string_view b);

enum class EvidenceSource { kSnippet = 0, kPage = 1 };

struct BestMatch {
  std::string text;
  double score = 0.0;
  SimilarityTriple similarity;
  EvidenceSource source = EvidenceSource::kSnippet;
  Engine engine = Engine::kFixture;
  int rank = 0;  // rank of the hit the text came from
};

// Highest-scoring window of three consecutive sentences (the whole page when
// it has fewer than three). Earliest window wins ties. Throws kNoMatch for an
// empty page.
BestMatch best_triplet(const TextProfile& claim, std::string_view page_text,
                       const SimilarityContext& ctx);
BestMatch best_triplet(std::string_view claim, std::string_view page_text,
                       const IdfTable& idf, const EmbeddingTable& table);

// Highest-scoring non-empty snippet; the lower rank wins ties. Throws
// kNoMatch when no result has a snippet.
BestMatch best_snippet(const TextProfile& claim, std::span<const SearchResult> results,
                       const SimilarityContext& ctx);
BestMatch best_snippet(std::string_view claim, std::span<const SearchResult> results,
                       const IdfTable& idf, const EmbeddingTable& table);

// 24 similarity slots: engine {google, bing} x source {snippet, page} x
// aggregate {max, avg} x measure {tfidf_cos, emb_cos, containment}.
inline constexpr std::size_t kSimilaritySlots = 24;

struct SimilarityBlock {
  std::array<double, kSimilaritySlots> values{};
  // Bit (engine * 2 + source) is set when that evidence list was non-empty.
  std::uint8_t presence = 0;

  static std::size_t Slot(Engine engine, EvidenceSource source, bool average,
                          int measure);
  static std::string SlotName(std::size_t slot);
  bool Present(Engine engine, EvidenceSource source) const;
};

// Which parts of a bundle a configuration may look at.
struct EvidenceGate {
  bool google = true;
  bool bing = true;
  bool snippets = true;
  bool pages = true;

  bool Allows(Engine engine) const { return engine == Engine::kGoogle ? google : bing; }
};

struct EvidenceSummary {
  SimilarityBlock block;
  std::array<std::optional<BestMatch>, 2> best_snippet;  // index 0 google, 1 bing
  std::array<std::optional<BestMatch>, 2> best_triplet;
};

EvidenceSummary summarize_evidence(const TextProfile& claim, const EvidenceBundle& bundle,
                                   const SimilarityContext& ctx,
                                   const EvidenceGate& gate = {});

SimilarityBlock aggregate_similarities(std::string_view claim, const EvidenceBundle& bundle,
                                       const IdfTable& idf, const EmbeddingTable& table);

enum class FeatureMode { kAvgEmbeddings, kLstmEmbeddings, kLstmPlusHidden };

std::string_view FeatureModeName(FeatureMode mode);
FeatureMode ParseFeatureMode(std::string_view name);

inline constexpr std::size_t kTextBlocks = 5;
inline constexpr std::size_t kHiddenUnits = 60;

// Names and offsets of every slot of a feature vector.
struct FeatureLayout {
  FeatureMode mode = FeatureMode::kAvgEmbeddings;
  std::size_t embedding_dim = 0;  // width of each text block
  std::size_t hidden_dim = 0;     // 0 unless mode is kLstmPlusHidden
  std::array<std::string, kTextBlocks> text_blocks = {
      "claim", "google_snippet", "google_triplet", "bing_snippet", "bing_triplet"};

  // d for averaged embeddings, 2H for bi-LSTM encodings.
  static FeatureLayout Make(FeatureMode mode, std::size_t embedding_dim,
                            std::size_t lstm_hidden = 0);

  std::size_t size() const;
  std::size_t TextBlockOffset(std::size_t block) const;
  std::size_t HiddenOffset() const;
  std::vector<std::string> SlotNames() const;
  std::string ToJson() const;
  static FeatureLayout FromJson(std::string_view json);

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

struct FeatureVector {
  std::string id;
  Label label = Label::kFalse;
  std::vector<double> values;
  std::uint8_t presence = 0;  // SimilarityBlock::presence
};

struct FeatureInputs {
  std::string id;
  Label label = Label::kFalse;
  SimilarityBlock similarities;
  // One vector per text block; empty for missing evidence (zero-filled).
  std::array<std::vector<double>, kTextBlocks> text;
  std::optional<std::vector<double>> hidden;
};

// Lays out [similarities | five text blocks | hidden?]. Throws
// kInvalidArgument when a block has the wrong width or the mode needs the
// hidden layer and none is given.
FeatureVector assemble_features(const FeatureInputs& inputs, const FeatureLayout& layout);

// `id<TAB>label<TAB>v1,v2,...` lines; values round-trip exactly.
void write_features(std::ostream& out, std::span<const FeatureVector> rows);
std::vector<FeatureVector> read_features(std::istream& in);

}  // namespace veriscope

#endif  // VERISCOPE_FEATURES_H_
