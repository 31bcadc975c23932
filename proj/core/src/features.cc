#include "veriscope/features.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"
#include "veriscope/error.h"

namespace veriscope {

namespace {

constexpr std::array<std::string_view, 3> kMeasureNames = {"tfidf_cos", "emb_cos",
                                                           "containment"};

std::size_t EngineIndex(Engine engine) {
  if (engine == Engine::kFixture) ThrowInvalid("fixture is not an engine slot");
  return engine == Engine::kGoogle ? 0 : 1;
}

double Clamp(double x, double lo, double hi) {
  if (!std::isfinite(x)) return 0.0;
  return std::min(hi, std::max(lo, x));
}

std::size_t IntersectionSize(const std::set<std::string>& a,
                             const std::set<std::string>& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

std::string FormatDouble(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

TextProfile make_profile(std::vector<Token> tokens, const SimilarityContext& ctx) {
  TextProfile p;
  p.tokens = std::move(tokens);

  std::map<std::string, double> tf;
  for (const Token& t : p.tokens) tf[t.lower] += 1.0;
  double norm = 0.0;
  p.tfidf.reserve(tf.size());
  for (const auto& [word, count] : tf) {
    const double w = count * (ctx.idf ? ctx.idf->idf(word) : 1.0);
    p.tfidf.emplace_back(word, w);
    norm += w * w;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& entry : p.tfidf) entry.second /= norm;
  }

  if (ctx.table) {
    p.embedding = avg_embedding(p.tokens, *ctx.table).vector;
    double sq = 0.0;
    for (double x : p.embedding) sq += x * x;
    p.embedding_norm = std::sqrt(sq);
  }
  p.trigrams = word_ngrams(p.tokens, 3);
  p.unigrams = word_ngrams(p.tokens, 1);
  return p;
}

TextProfile make_profile(std::string_view text, const SimilarityContext& ctx) {
  return make_profile(tokenize(text), ctx);
}

double SimilarityTriple::SelectionScore() const {
  return (tfidf_cos + (emb_cos + 1.0) / 2.0 + containment) / 3.0;
}

double tfidf_cosine(const TextProfile& a, const TextProfile& b) {
  if (a.tfidf.empty() || b.tfidf.empty()) return 0.0;
  // Both lists are sorted by word, so the products are summed in the same
  // order whichever side comes first.
  double dot = 0.0;
  auto i = a.tfidf.begin();
  auto j = b.tfidf.begin();
  while (i != a.tfidf.end() && j != b.tfidf.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      dot += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return Clamp(dot, 0.0, 1.0);
}

double embedding_cosine(const TextProfile& a, const TextProfile& b) {
  if (a.embedding_norm == 0.0 || b.embedding_norm == 0.0) return 0.0;
  if (a.embedding.size() != b.embedding.size()) ThrowInvalid("embedding width mismatch");
  double dot = 0.0;
  for (std::size_t k = 0; k < a.embedding.size(); ++k) dot += a.embedding[k] * b.embedding[k];
  return Clamp(dot / (a.embedding_norm * b.embedding_norm), -1.0, 1.0);
}

double containment(const TextProfile& claim, const TextProfile& b) {
  const bool short_claim = claim.tokens.size() < 3;
  const auto& mine = short_claim ? claim.unigrams : claim.trigrams;
  if (mine.empty()) return 0.0;
  const auto& theirs = short_claim ? b.unigrams : b.trigrams;
  return static_cast<double>(IntersectionSize(mine, theirs)) /
         static_cast<double>(mine.size());
}

SimilarityTriple compare(const TextProfile& claim, const TextProfile& other) {
  return {tfidf_cosine(claim, other), embedding_cosine(claim, other),
          containment(claim, other)};
}

double tfidf_cosine(std::string_view a, std::string_view b, const IdfTable& idf) {
  const SimilarityContext ctx{&idf, nullptr};
  return tfidf_cosine(make_profile(a, ctx), make_profile(b, ctx));
}

double embedding_cosine(std::string_view a, std::string_view b,
                        const EmbeddingTable& table) {
  const SimilarityContext ctx{nullptr, &table};
  return embedding_cosine(make_profile(a, ctx), make_profile(b, ctx));
}

double containment(std::string_view a, std::string_view b) {
  const SimilarityContext ctx{};
  return containment(make_profile(a, ctx), make_profile(b, ctx));
}

BestMatch best_triplet(const TextProfile& claim, std::string_view page_text,
                       const SimilarityContext& ctx) {
  const std::vector<Sentence> sentences = split_sentences(page_text);
  if (sentences.empty()) throw Error(ErrorCode::kNoMatch, "empty page");
  const std::size_t windows = sentences.size() < 3 ? 1 : sentences.size() - 2;
  const std::size_t width = std::min<std::size_t>(3, sentences.size());

  BestMatch best;
  best.source = EvidenceSource::kPage;
  bool have = false;
  for (std::size_t w = 0; w < windows; ++w) {
    std::vector<Token> tokens;
    for (std::size_t k = w; k < w + width; ++k) {
      tokens.insert(tokens.end(), sentences[k].tokens.begin(), sentences[k].tokens.end());
    }
    const SimilarityTriple sim = compare(claim, make_profile(std::move(tokens), ctx));
    const double score = sim.SelectionScore();
    if (!have || score > best.score) {
      have = true;
      best.score = score;
      best.similarity = sim;
      const std::size_t b = sentences[w].begin;
      best.text = std::string(page_text.substr(b, sentences[w + width - 1].end - b));
    }
  }
  return best;
}

BestMatch best_triplet(std::string_view claim, std::string_view page_text,
                       const IdfTable& idf, const EmbeddingTable& table) {
  const SimilarityContext ctx{&idf, &table};
  return best_triplet(make_profile(claim, ctx), page_text, ctx);
}

BestMatch best_snippet(const TextProfile& claim, std::span<const SearchResult> results,
                       const SimilarityContext& ctx) {
  std::vector<const SearchResult*> ordered;
  for (const SearchResult& r : results) {
    if (!r.snippet.empty()) ordered.push_back(&r);
  }
  if (ordered.empty()) throw Error(ErrorCode::kNoMatch, "no snippets");
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const SearchResult* a, const SearchResult* b) { return a->rank < b->rank; });
  BestMatch best;
  bool have = false;
  for (const SearchResult* r : ordered) {
    const SimilarityTriple sim = compare(claim, make_profile(r->snippet, ctx));
    const double score = sim.SelectionScore();
    if (!have || score > best.score) {
      have = true;
      best.text = r->snippet;
      best.score = score;
      best.similarity = sim;
      best.source = EvidenceSource::kSnippet;
      best.engine = r->engine;
      best.rank = r->rank;
    }
  }
  return best;
}

BestMatch best_snippet(std::string_view claim, std::span<const SearchResult> results,
                       const IdfTable& idf, const EmbeddingTable& table) {
  const SimilarityContext ctx{&idf, &table};
  return best_snippet(make_profile(claim, ctx), results, ctx);
}

std::size_t SimilarityBlock::Slot(Engine engine, EvidenceSource source, bool average,
                                  int measure) {
  return ((EngineIndex(engine) * 2 + static_cast<std::size_t>(source)) * 2 +
          (average ? 1 : 0)) * 3 +
         static_cast<std::size_t>(measure);
}

std::string SimilarityBlock::SlotName(std::size_t slot) {
  const std::size_t measure = slot % 3;
  const std::size_t aggregate = (slot / 3) % 2;
  const std::size_t source = (slot / 6) % 2;
  const std::size_t engine = slot / 12;
  std::string name = engine == 0 ? "google" : "bing";
  name += source == 0 ? ".snippet" : ".page";
  name += aggregate == 0 ? ".max." : ".avg.";
  name += kMeasureNames[measure];
  return name;
}

bool SimilarityBlock::Present(Engine engine, EvidenceSource source) const {
  return presence & (1u << (EngineIndex(engine) * 2 + static_cast<std::size_t>(source)));
}

EvidenceSummary summarize_evidence(const TextProfile& claim, const EvidenceBundle& bundle,
                                   const SimilarityContext& ctx, const EvidenceGate& gate) {
  EvidenceSummary summary;
  for (Engine engine : {Engine::kGoogle, Engine::kBing}) {
    if (!gate.Allows(engine)) continue;
    const std::size_t e = EngineIndex(engine);
    std::vector<SearchResult> results = bundle.For(engine).results;
    std::stable_sort(results.begin(), results.end(),
                     [](const SearchResult& a, const SearchResult& b) { return a.rank < b.rank; });
    if (results.size() > kMaxHits) results.resize(kMaxHits);

    for (EvidenceSource source : {EvidenceSource::kSnippet, EvidenceSource::kPage}) {
      const bool pages = source == EvidenceSource::kPage;
      if (pages ? !gate.pages : !gate.snippets) continue;
      std::vector<SimilarityTriple> triples;
      for (const SearchResult& r : results) {
        if (!pages) {
          if (r.snippet.empty()) continue;
          BestMatch m;
          m.text = r.snippet;
          m.similarity = compare(claim, make_profile(r.snippet, ctx));
          m.score = m.similarity.SelectionScore();
          m.source = source;
          m.engine = engine;
          m.rank = r.rank;
          triples.push_back(m.similarity);
          auto& best = summary.best_snippet[e];
          if (!best || m.score > best->score) best = std::move(m);
        } else {
          if (!r.page_text || r.page_text->empty()) continue;
          BestMatch m = best_triplet(claim, *r.page_text, ctx);
          m.engine = engine;
          m.rank = r.rank;
          triples.push_back(m.similarity);
          auto& best = summary.best_triplet[e];
          if (!best || m.score > best->score) best = std::move(m);
        }
      }
      if (triples.empty()) continue;
      summary.block.presence |= static_cast<std::uint8_t>(1u << (e * 2 + (pages ? 1 : 0)));
      for (int measure = 0; measure < 3; ++measure) {
        double mx = -2.0;
        double sum = 0.0;
        for (const SimilarityTriple& t : triples) {
          const double v = measure == 0 ? t.tfidf_cos : measure == 1 ? t.emb_cos : t.containment;
          mx = std::max(mx, v);
          sum += v;
        }
        double avg = sum / static_cast<double>(triples.size());
        avg = std::min(avg, mx);  // guard rounding so avg <= max slot-wise
        summary.block.values[SimilarityBlock::Slot(engine, source, false, measure)] = mx;
        summary.block.values[SimilarityBlock::Slot(engine, source, true, measure)] = avg;
      }
    }
  }
  return summary;
}

SimilarityBlock aggregate_similarities(std::string_view claim, const EvidenceBundle& bundle,
                                       const IdfTable& idf, const EmbeddingTable& table) {
  const SimilarityContext ctx{&idf, &table};
  return summarize_evidence(make_profile(claim, ctx), bundle, ctx).block;
}

std::string_view FeatureModeName(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kAvgEmbeddings: return "avg_embeddings";
    case FeatureMode::kLstmEmbeddings: return "lstm_embeddings";
    case FeatureMode::kLstmPlusHidden: return "lstm_plus_hidden";
  }
  return "avg_embeddings";
}

FeatureMode ParseFeatureMode(std::string_view name) {
  if (name == "avg_embeddings") return FeatureMode::kAvgEmbeddings;
  if (name == "lstm_embeddings") return FeatureMode::kLstmEmbeddings;
  if (name == "lstm_plus_hidden") return FeatureMode::kLstmPlusHidden;
  ThrowInvalid("unknown feature mode '" + std::string(name) + "'");
}

FeatureLayout FeatureLayout::Make(FeatureMode mode, std::size_t embedding_dim,
                                  std::size_t lstm_hidden) {
  FeatureLayout layout;
  layout.mode = mode;
  if (mode == FeatureMode::kAvgEmbeddings) {
    if (embedding_dim == 0) ThrowInvalid("averaged embeddings need d > 0");
    layout.embedding_dim = embedding_dim;
  } else {
    if (lstm_hidden == 0) ThrowInvalid("LSTM feature modes need H > 0");
    layout.embedding_dim = 2 * lstm_hidden;
  }
  layout.hidden_dim = mode == FeatureMode::kLstmPlusHidden ? kHiddenUnits : 0;
  return layout;
}

std::size_t FeatureLayout::size() const {
  return kSimilaritySlots + kTextBlocks * embedding_dim + hidden_dim;
}

std::size_t FeatureLayout::TextBlockOffset(std::size_t block) const {
  return kSimilaritySlots + block * embedding_dim;
}

std::size_t FeatureLayout::HiddenOffset() const {
  return kSimilaritySlots + kTextBlocks * embedding_dim;
}

std::vector<std::string> FeatureLayout::SlotNames() const {
  std::vector<std::string> names;
  names.reserve(size());
  for (std::size_t s = 0; s < kSimilaritySlots; ++s) {
    names.push_back("sim." + SimilarityBlock::SlotName(s));
  }
  const char* kind = mode == FeatureMode::kAvgEmbeddings ? ".avg[" : ".lstm[";
  for (const std::string& block : text_blocks) {
    for (std::size_t k = 0; k < embedding_dim; ++k) {
      names.push_back("emb." + block + kind + std::to_string(k) + "]");
    }
  }
  for (std::size_t k = 0; k < hidden_dim; ++k) {
    names.push_back("hidden[" + std::to_string(k) + "]");
  }
  return names;
}

std::string FeatureLayout::ToJson() const {
  nlohmann::json blocks = nlohmann::json::array();
  blocks.push_back({{"name", "similarities"}, {"offset", 0}, {"width", kSimilaritySlots}});
  for (std::size_t b = 0; b < kTextBlocks; ++b) {
    blocks.push_back({{"name", text_blocks[b]},
                      {"offset", TextBlockOffset(b)},
                      {"width", embedding_dim}});
  }
  if (hidden_dim > 0) {
    blocks.push_back({{"name", "hidden"}, {"offset", HiddenOffset()}, {"width", hidden_dim}});
  }
  const nlohmann::json j = {{"mode", std::string(FeatureModeName(mode))},
                            {"embedding_dim", embedding_dim},
                            {"hidden_dim", hidden_dim},
                            {"size", size()},
                            {"text_blocks", text_blocks},
                            {"blocks", blocks},
                            {"slots", SlotNames()}};
  return j.dump(1);
}

FeatureLayout FeatureLayout::FromJson(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    FeatureLayout layout;
    layout.mode = ParseFeatureMode(j.at("mode").get<std::string>());
    layout.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    layout.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    layout.text_blocks = j.at("text_blocks").get<std::array<std::string, kTextBlocks>>();
    return layout;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("feature layout: ") + e.what());
  }
}

FeatureVector assemble_features(const FeatureInputs& inputs, const FeatureLayout& layout) {
  if (layout.mode == FeatureMode::kLstmPlusHidden && !inputs.hidden) {
    ThrowInvalid("lstm_plus_hidden needs hidden-layer activations from a trained network");
  }
  FeatureVector fv;
  fv.id = inputs.id;
  fv.label = inputs.label;
  fv.presence = inputs.similarities.presence;
  fv.values.assign(layout.size(), 0.0);
  std::copy(inputs.similarities.values.begin(), inputs.similarities.values.end(),
            fv.values.begin());
  for (std::size_t b = 0; b < kTextBlocks; ++b) {
    const auto& block = inputs.text[b];
    if (block.empty()) continue;
    if (block.size() != layout.embedding_dim) {
      ThrowInvalid("text block '" + layout.text_blocks[b] + "' has width " +
                   std::to_string(block.size()) + ", layout expects " +
                   std::to_string(layout.embedding_dim));
    }
    std::copy(block.begin(), block.end(),
              fv.values.begin() + static_cast<std::ptrdiff_t>(layout.TextBlockOffset(b)));
  }
  if (layout.hidden_dim > 0) {
    if (inputs.hidden->size() != layout.hidden_dim) ThrowInvalid("hidden block width mismatch");
    std::copy(inputs.hidden->begin(), inputs.hidden->end(),
              fv.values.begin() + static_cast<std::ptrdiff_t>(layout.HiddenOffset()));
  }
  return fv;
}

void write_features(std::ostream& out, std::span<const FeatureVector> rows) {
  for (const FeatureVector& row : rows) {
    out << row.id << '\t' << LabelName(row.label) << '\t';
    for (std::size_t k = 0; k < row.values.size(); ++k) {
      if (k) out << ',';
      out << FormatDouble(row.values[k]);
    }
    out << '\n';
  }
}

std::vector<FeatureVector> read_features(std::istream& in) {
  std::vector<FeatureVector> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw FormatError(line_no, "expected id<TAB>label<TAB>values");
    FeatureVector fv;
    fv.id = line.substr(0, t1);
    try {
      fv.label = ParseLabel(line.substr(t1 + 1, t2 - t1 - 1));
    } catch (const Error& e) {
      throw FormatError(line_no, e.what());
    }
    const char* p = line.data() + t2 + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      auto [q, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw FormatError(line_no, "bad feature value");
      fv.values.push_back(v);
      p = q;
      if (p < end) {
        if (*p != ',') throw FormatError(line_no, "expected ','");
        ++p;
      }
    }
    rows.push_back(std::move(fv));
  }
  return rows;
}

}  // namespace veriscope
