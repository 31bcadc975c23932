#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "veriscope/rng.h"
#include "veriscope/text.h"

namespace veriscope {
namespace {

using testing::Lowers;
using testing::Toks;

std::vector<std::string> EntityTexts(std::string_view text) {
  std::vector<std::string> out;
  for (const EntityPhrase& e : extract_entities(text)) out.push_back(e.text);
  return out;
}

std::string RandomText(Rng& rng) {
  static const std::vector<std::string> kWords = {
      "the",    "Clock",  "was",   "arrested", "Irving", "school", "of",
      "state-of-the-art", "it's", "Ahmed", "e.g.", "news",   "Qatar", "and",
      "Straße", "ÉCOLE",  "x",     "hoax",   "42",     "said",   "by"};
  static const std::vector<std::string> kPunct = {"", "", "", ",", ".", "!", "?", ";"};
  std::string out;
  const std::size_t n = rng.Below(15);
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.empty()) out += rng.Below(5) == 0 ? "  " : " ";
    out += kWords[rng.Below(kWords.size())];
    out += kPunct[rng.Below(kPunct.size())];
  }
  return out;
}

TEST_CASE("tokenize splits on whitespace and punctuation") {
  CHECK(tokenize("").empty());

  const auto t = tokenize("Australia's election");
  REQUIRE(t.size() == 2);
  CHECK(Lowers(t) == std::vector<std::string>{"australia's", "election"});
  CHECK(t[0].is_capitalized);
  CHECK_FALSE(t[1].is_capitalized);

  CHECK(Lowers(tokenize("state-of-the-art!")) ==
        std::vector<std::string>{"state-of-the-art"});
}

TEST_CASE("tokenize records byte positions and folds Unicode case") {
  const std::string text = "Élan met ÉCOLE Straße";
  const auto t = tokenize(text);
  REQUIRE(t.size() == 4);
  CHECK(t[0].is_capitalized);
  CHECK(t[2].lower == "école");
  CHECK(t[3].lower == "strasse");
  for (const Token& tok : t) CHECK(text.substr(tok.position, tok.surface.size()) == tok.surface);
}

TEST_CASE("split_sentences boundary rule") {
  CHECK(split_sentences("A b. C d.").size() == 2);
  CHECK(split_sentences("no terminator here").size() == 1);
  CHECK(split_sentences("e.g. lower next").size() == 1);
  CHECK(split_sentences("").empty());
}

TEST_CASE("content_tokens filters closed-class words") {
  CHECK(Lowers(content_tokens(Toks({"the", "clock", "was", "confiscated"}))) ==
        std::vector<std::string>{"clock", "confiscated"});
  CHECK(content_tokens(std::vector<Token>{}).empty());
  CHECK(content_tokens(Toks({"of", "the", "and"})).empty());
}

TEST_CASE("custom lexicons load with comments and blank lines") {
  std::istringstream in("# stop words\nfoo\n\nbar  \n");
  const Lexicon lex = Lexicon::Load(in);
  CHECK(lex.size() == 2);
  CHECK(Lowers(content_tokens(Toks({"foo", "the", "bar"}), lex)) ==
        std::vector<std::string>{"the"});
  CHECK(Lexicon::Default().size() > 200);
}

TEST_CASE("extract_entities capitalization heuristic") {
  CHECK(EntityTexts("He visited Ahmed Mohamed in Irving") ==
        std::vector<std::string>{"Ahmed Mohamed", "Irving"});
  CHECK(EntityTexts("nothing capitalized here").empty());
  CHECK(EntityTexts("Chipotle is closing. Chipotle said so.") ==
        std::vector<std::string>{"Chipotle"});
}

TEST_CASE("word_ngrams") {
  CHECK(word_ngrams(Toks({"a", "b", "c", "d"}), 3) ==
        std::set<std::string>{"a b c", "b c d"});
  CHECK(word_ngrams(Toks({"a"}), 3) == std::set<std::string>{"a"});
  CHECK(word_ngrams(Toks({"a", "a", "b"}), 2) == std::set<std::string>{"a a", "a b"});
  CHECK(testing::CodeOf([] { word_ngrams(Toks({"a"}), 0); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("text properties on random inputs") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::string text = RandomText(rng);
    const auto tokens = tokenize(text);

    std::string joined;
    for (const Token& t : tokens) joined += (joined.empty() ? "" : " ") + t.surface;
    const auto again = tokenize(joined);
    REQUIRE(again.size() == tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      CHECK(again[i].surface == tokens[i].surface);
      CHECK(!tokens[i].surface.empty());
      CHECK(tokens[i].lower == FoldCase(tokens[i].surface));
    }

    const auto content = content_tokens(tokens);
    std::size_t j = 0;
    for (const Token& t : tokens) {
      if (j < content.size() && content[j].position == t.position) ++j;
    }
    CHECK(j == content.size());

    for (const EntityPhrase& e : extract_entities(text)) {
      CHECK(!e.tokens.empty());
      CHECK(text.find(e.text) != std::string::npos);
      for (const Token& t : e.tokens) CHECK(t.is_capitalized);
    }

    const auto sentences = split_sentences(text);
    std::size_t prev_end = 0;
    std::string covered;
    for (const Sentence& s : sentences) {
      CHECK(s.begin >= prev_end);
      CHECK(s.begin < s.end);
      prev_end = s.end;
      covered += text.substr(s.begin, s.end - s.begin);
    }
    auto strip = [](std::string s) {
      s.erase(std::remove_if(s.begin(), s.end(),
                             [](unsigned char c) { return std::isspace(c); }),
              s.end());
      return s;
    };
    CHECK(strip(covered) == strip(text));

    for (std::size_t n = 1; n <= 4; ++n) {
      // Shorter inputs fall back to unigrams.
      const std::size_t bound =
          tokens.size() >= n ? tokens.size() - n + 1 : tokens.size();
      CHECK(word_ngrams(tokens, n).size() <= bound);
    }
  }
}

}  // namespace
}  // namespace veriscope
