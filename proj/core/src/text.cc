#include "veriscope/text.h"

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "veriscope/error.h"

namespace veriscope {

extern const char kClosedClassLexicon[];  // generated from data/closed_class.txt

namespace {

struct CodePoint {
  UChar32 value;
  std::size_t begin;
  std::size_t end;
};

// Decodes one scalar at byte offset i. Malformed bytes decode as U+FFFD.
CodePoint Decode(std::string_view text, std::size_t i) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  int32_t pos = static_cast<int32_t>(i);
  const int32_t length = static_cast<int32_t>(text.size());
  UChar32 c;
  U8_NEXT(s, pos, length, c);
  if (c < 0) c = 0xFFFD;
  return {c, i, static_cast<std::size_t>(pos)};
}

bool IsWordChar(UChar32 c) {
  if (u_isalnum(c)) return true;
  const int8_t type = u_charType(c);
  return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK ||
         type == U_ENCLOSING_MARK;
}

bool IsJoiner(UChar32 c) {
  return c == '\'' || c == 0x2019 || c == '-' || c == 0x2010 || c == 0x2011;
}

bool IsUpperStart(UChar32 c) { return u_isupper(c) || u_istitle(c); }

bool IsTerminator(UChar32 c) { return c == '.' || c == '!' || c == '?'; }

bool IsCloser(UChar32 c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == 0x201D ||
         c == 0x2019 || c == 0xBB;
}

bool IsSpace(UChar32 c) { return u_isUWhiteSpace(c); }

std::vector<CodePoint> DecodeAll(std::string_view text) {
  std::vector<CodePoint> cps;
  cps.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    CodePoint cp = Decode(text, i);
    cps.push_back(cp);
    i = cp.end;
  }
  return cps;
}

Token MakeToken(std::string_view text, std::size_t begin, std::size_t end,
                UChar32 first) {
  Token t;
  t.surface = std::string(text.substr(begin, end - begin));
  t.lower = FoldCase(t.surface);
  t.is_capitalized = IsUpperStart(first);
  t.position = begin;
  return t;
}

bool OnlySpaceBetween(std::string_view text, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end;) {
    CodePoint cp = Decode(text, i);
    if (!IsSpace(cp.value)) return false;
    i = cp.end;
  }
  return true;
}

}  // namespace

std::string FoldCase(std::string_view text) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  u.foldCase();
  std::string out;
  u.toUTF8String(out);
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  const std::vector<CodePoint> cps = DecodeAll(text);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (!IsWordChar(cps[i].value)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    ++i;
    while (i < cps.size()) {
      if (IsWordChar(cps[i].value)) {
        ++i;
      } else if (IsJoiner(cps[i].value) && i + 1 < cps.size() &&
                 IsWordChar(cps[i + 1].value)) {
        i += 2;
      } else {
        break;
      }
    }
    tokens.push_back(
        MakeToken(text, cps[start].begin, cps[i - 1].end, cps[start].value));
  }
  return tokens;
}

std::vector<Sentence> split_sentences(std::string_view text) {
  std::vector<Sentence> sentences;
  const std::vector<CodePoint> cps = DecodeAll(text);

  auto emit = [&](std::size_t first_cp, std::size_t last_cp) {
    Sentence s;
    s.begin = cps[first_cp].begin;
    s.end = cps[last_cp].end;
    s.text = std::string(text.substr(s.begin, s.end - s.begin));
    s.tokens = tokenize(s.text);
    for (Token& t : s.tokens) t.position += s.begin;
    sentences.push_back(std::move(s));
  };

  std::size_t i = 0;
  while (i < cps.size() && IsSpace(cps[i].value)) ++i;
  std::size_t start = i;
  while (i < cps.size()) {
    if (!IsTerminator(cps[i].value)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && IsTerminator(cps[j].value)) ++j;
    while (j < cps.size() && IsCloser(cps[j].value)) ++j;
    const std::size_t last = j - 1;
    std::size_t k = j;
    while (k < cps.size() && IsSpace(cps[k].value)) ++k;
    const bool at_end = k == cps.size();
    const bool boundary =
        at_end || (k > j && IsUpperStart(cps[k].value));
    if (boundary) {
      emit(start, last);
      start = k;
      i = k;
    } else {
      i = j;
    }
  }
  if (start < cps.size()) {
    std::size_t last = cps.size() - 1;
    while (last > start && IsSpace(cps[last].value)) --last;
    emit(start, last);
  }
  return sentences;
}

Lexicon Lexicon::Load(std::istream& in) {
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    words.insert(FoldCase(line.substr(b, e - b + 1)));
  }
  return Lexicon(std::move(words));
}

Lexicon Lexicon::LoadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open lexicon " + path);
  return Load(in);
}

const Lexicon& Lexicon::Default() {
  static const Lexicon lexicon = [] {
    std::istringstream in(kClosedClassLexicon);
    return Load(in);
  }();
  return lexicon;
}

std::vector<Token> content_tokens(std::span<const Token> tokens,
                                  const Lexicon& lexicon) {
  std::vector<Token> out;
  for (const Token& t : tokens) {
    if (!lexicon.Contains(t.lower)) out.push_back(t);
  }
  return out;
}

std::vector<EntityPhrase> extract_entities(std::string_view text,
                                           const Lexicon& lexicon) {
  std::vector<Token> tokens;
  std::vector<bool> initial;
  for (Sentence& s : split_sentences(text)) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      initial.push_back(i == 0);
      tokens.push_back(std::move(s.tokens[i]));
    }
  }

  std::unordered_map<std::string, int> capitalized_count;
  for (const Token& t : tokens) {
    if (t.is_capitalized) ++capitalized_count[t.lower];
  }
  auto eligible = [&](const Token& t) {
    return t.is_capitalized && !lexicon.Contains(t.lower);
  };

  std::vector<EntityPhrase> entities;
  std::unordered_set<std::string> seen;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!eligible(tokens[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tokens.size() && eligible(tokens[j]) &&
           OnlySpaceBetween(text, tokens[j - 1].end(), tokens[j].position)) {
      ++j;
    }
    const bool lone_initial = j == i + 1 && initial[i];
    if (!lone_initial || capitalized_count[tokens[i].lower] >= 2) {
      EntityPhrase phrase;
      phrase.tokens.assign(tokens.begin() + i, tokens.begin() + j);
      phrase.text = std::string(text.substr(
          tokens[i].position, tokens[j - 1].end() - tokens[i].position));
      std::string key;
      for (const Token& t : phrase.tokens) {
        if (!key.empty()) key += ' ';
        key += t.lower;
      }
      if (seen.insert(key).second) entities.push_back(std::move(phrase));
    }
    i = j;
  }
  return entities;
}

std::vector<Token> HeuristicAnnotator::ContentTokens(
    std::span<const Token> tokens) const {
  return content_tokens(tokens, *lexicon_);
}

std::vector<EntityPhrase> HeuristicAnnotator::Entities(std::string_view text) const {
  return extract_entities(text, *lexicon_);
}

std::set<std::string> word_ngrams(std::span<const Token> tokens, std::size_t n) {
  if (n == 0) ThrowInvalid("word_ngrams: n must be positive");
  std::set<std::string> grams;
  if (tokens.size() < n) n = 1;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string gram = tokens[i].lower;
    for (std::size_t k = 1; k < n; ++k) {
      gram += ' ';
      gram += tokens[i + k].lower;
    }
    grams.insert(std::move(gram));
  }
  return grams;
}

std::vector<std::string> lower_words(std::string_view text) {
  std::vector<std::string> words;
  for (Token& t : tokenize(text)) words.push_back(std::move(t.lower));
  return words;
}

}  // namespace veriscope
