#ifndef VERISCOPE_TEXT_H_
#define VERISCOPE_TEXT_H_

#include <cstddef>
#include <istream>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace veriscope {

struct Token {
  std::string surface;
  std::string lower;  // full Unicode case fold of surface
  bool is_capitalized = false;
  std::size_t position = 0;  // byte offset of surface in the source text

  std::size_t end() const { return position + surface.size(); }
};

struct Sentence {
  std::string text;
  std::vector<Token> tokens;
  std::size_t begin = 0;  // [begin, end) byte span in the source text
  std::size_t end = 0;
};

struct EntityPhrase {
  std::vector<Token> tokens;
  std::string text;
};

// Full Unicode case folding of UTF-8 text.
std::string FoldCase(std::string_view text);

// Splits on whitespace and punctuation. Apostrophes and hyphens are kept
// when they sit between two word characters.
std::vector<Token> tokenize(std::string_view text);

// Sentence boundaries fall after a run of '.', '!' or '?' (optionally
// followed by closing quotes or brackets) when the next thing is whitespace
// and then an uppercase letter, or the end of the text.
std::vector<Sentence> split_sentences(std::string_view text);

// Set of lowercase words treated as closed-class (function) words.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::unordered_set<std::string> words)
      : words_(std::move(words)) {}

  // One word per line; '#' starts a comment; blank lines ignored.
  static Lexicon Load(std::istream& in);
  static Lexicon LoadFile(const std::string& path);

  // The closed-class list compiled into the library.
  static const Lexicon& Default();

  bool Contains(std::string_view lower) const {
    return words_.find(std::string(lower)) != words_.end();
  }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// Pluggable linguistic annotation. The heuristic implementation stands in
// for a POS tagger and an NER service.
class Annotator {
 public:
  virtual ~Annotator() = default;

  // Keeps content words (nouns, verbs, adjectives and the like).
  virtual std::vector<Token> ContentTokens(std::span<const Token> tokens) const = 0;
  virtual std::vector<EntityPhrase> Entities(std::string_view text) const = 0;
};

class HeuristicAnnotator : public Annotator {
 public:
  HeuristicAnnotator() : lexicon_(&Lexicon::Default()) {}
  explicit HeuristicAnnotator(const Lexicon& lexicon) : lexicon_(&lexicon) {}

  std::vector<Token> ContentTokens(std::span<const Token> tokens) const override;
  std::vector<EntityPhrase> Entities(std::string_view text) const override;

  const Lexicon& lexicon() const { return *lexicon_; }

 private:
  const Lexicon* lexicon_;
};

// Drops every token whose lowercase form is in the lexicon.
std::vector<Token> content_tokens(std::span<const Token> tokens,
                                  const Lexicon& lexicon = Lexicon::Default());

// Maximal runs of capitalized tokens, separated only by whitespace. A run
// made of a single sentence-initial token is dropped unless the same word
// shows up capitalized somewhere else in the text. Closed-class words
// ("The", "In", "I") never belong to a run. Deduplicated by lowercase
// phrase, first occurrence wins.
std::vector<EntityPhrase> extract_entities(
    std::string_view text, const Lexicon& lexicon = Lexicon::Default());

// Space-joined lowercase n-grams. Falls back to unigrams when there are
// fewer than n tokens. Throws kInvalidArgument for n == 0.
std::set<std::string> word_ngrams(std::span<const Token> tokens, std::size_t n);

// Lowercase forms of the tokens of text.
std::vector<std::string> lower_words(std::string_view text);

}  // namespace veriscope

#endif  // VERISCOPE_TEXT_H_
