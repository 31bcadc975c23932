#include "veriscope/html.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <string_view>

namespace veriscope {

namespace {

struct NamedEntity {
  std::string_view name;
  char32_t code;
};

constexpr std::array<NamedEntity, 40> kEntities = {{
    {"amp", '&'},       {"lt", '<'},        {"gt", '>'},
    {"quot", '"'},      {"apos", '\''},     {"nbsp", ' '},
    {"ndash", 0x2013},  {"mdash", 0x2014},  {"hellip", 0x2026},
    {"lsquo", 0x2018},  {"rsquo", 0x2019},  {"ldquo", 0x201C},
    {"rdquo", 0x201D},  {"laquo", 0xAB},    {"raquo", 0xBB},
    {"copy", 0xA9},     {"reg", 0xAE},      {"trade", 0x2122},
    {"bull", 0x2022},   {"middot", 0xB7},   {"deg", 0xB0},
    {"euro", 0x20AC},   {"pound", 0xA3},    {"cent", 0xA2},
    {"sect", 0xA7},     {"times", 0xD7},    {"eacute", 0xE9},
    {"egrave", 0xE8},   {"aacute", 0xE1},   {"agrave", 0xE0},
    {"iacute", 0xED},   {"oacute", 0xF3},   {"uacute", 0xFA},
    {"ntilde", 0xF1},   {"ccedil", 0xE7},   {"auml", 0xE4},
    {"ouml", 0xF6},     {"uuml", 0xFC},     {"szlig", 0xDF},
    {"shy", 0xAD},
}};

constexpr std::array<std::string_view, 6> kSkipElements = {
    "script", "style", "noscript", "template", "svg", "head"};

constexpr std::array<std::string_view, 43> kBlockElements = {
    "address", "article", "aside",  "blockquote", "br",      "caption",
    "center",  "dd",      "details", "dialog",    "div",     "dl",
    "dt",      "fieldset", "figcaption", "figure", "footer", "form",
    "h1",      "h2",      "h3",     "h4",         "h5",      "h6",
    "header",  "hr",      "li",     "main",       "nav",     "ol",
    "option",  "p",       "pre",    "section",    "summary", "table",
    "tbody",   "td",      "th",     "thead",      "title",   "tr",
    "ul"};

void AppendUtf8(char32_t c, std::string* out) {
  if (c < 0x80) {
    out->push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (c >> 6)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (c >> 12)));
    out->push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (c >> 18)));
    out->push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

// Tries to decode a reference starting at text[i] == '&'. On success appends
// the character and returns the index just past the reference.
std::size_t DecodeReference(std::string_view text, std::size_t i, std::string* out) {
  const std::size_t semi = text.find(';', i + 1);
  if (semi == std::string_view::npos || semi - i > 12) return i;
  std::string_view body = text.substr(i + 1, semi - i - 1);
  if (body.empty()) return i;
  if (body[0] == '#') {
    std::uint32_t code = 0;
    int base = 10;
    std::string_view digits = body.substr(1);
    if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X')) {
      base = 16;
      digits.remove_prefix(1);
    }
    if (digits.empty()) return i;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(),
                                   code, base);
    if (ec != std::errc() || p != digits.data() + digits.size()) return i;
    if (code == 0 || code > 0x10FFFF || (code >= 0xD800 && code <= 0xDFFF)) {
      code = 0xFFFD;
    }
    if (code == 0xA0) code = ' ';
    AppendUtf8(code, out);
    return semi + 1;
  }
  for (const NamedEntity& e : kEntities) {
    if (e.name == body) {
      if (e.code != 0xAD) AppendUtf8(e.code, out);
      return semi + 1;
    }
  }
  return i;
}

bool IsInlineSpace(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

std::string LowerAscii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Index just past the '>' closing a tag that starts at i, honoring quoted
// attribute values. Returns text.size() for an unterminated tag.
std::size_t TagEnd(std::string_view html, std::size_t i) {
  char quote = 0;
  for (std::size_t k = i + 1; k < html.size(); ++k) {
    const char c = html[k];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return k + 1;
    }
  }
  return html.size();
}

}  // namespace

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '&') {
      const std::size_t next = DecodeReference(text, i, &out);
      if (next != i) {
        i = next;
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::string line;
  auto flush = [&] {
    while (!line.empty() && line.back() == ' ') line.pop_back();
    if (!line.empty()) {
      if (!out.empty()) out.push_back('\n');
      out += line;
    }
    line.clear();
  };
  for (char c : text) {
    if (c == '\n') {
      flush();
    } else if (IsInlineSpace(c)) {
      if (!line.empty() && line.back() != ' ') line.push_back(' ');
    } else {
      line.push_back(c);
    }
  }
  flush();
  return out;
}

std::string html_to_text(std::string_view html) {
  std::string raw;
  raw.reserve(html.size());
  std::size_t i = 0;
  while (i < html.size()) {
    const char c = html[i];
    if (c == '<') {
      if (html.substr(i, 4) == "<!--") {
        const std::size_t close = html.find("-->", i + 4);
        i = close == std::string_view::npos ? html.size() : close + 3;
        continue;
      }
      const bool closing = i + 1 < html.size() && html[i + 1] == '/';
      const std::size_t name_start = i + (closing ? 2 : 1);
      if (name_start < html.size() &&
          (std::isalpha(static_cast<unsigned char>(html[name_start])) ||
           html[name_start] == '!' || html[name_start] == '?')) {
        std::size_t name_end = name_start;
        while (name_end < html.size() &&
               (std::isalnum(static_cast<unsigned char>(html[name_end])) ||
                html[name_end] == '-')) {
          ++name_end;
        }
        const std::string name =
            LowerAscii(html.substr(name_start, name_end - name_start));
        const std::size_t end = TagEnd(html, i);
        const bool self_closing = end >= 2 && html[end - 2] == '/';
        i = end;
        if (!closing && !self_closing &&
            std::find(kSkipElements.begin(), kSkipElements.end(), name) !=
                kSkipElements.end()) {
          // Skip to the matching close tag.
          const std::string lowered_close = "</" + name;
          std::size_t k = i;
          while (k < html.size()) {
            const std::size_t lt = html.find("</", k);
            if (lt == std::string_view::npos) {
              k = html.size();
              break;
            }
            if (LowerAscii(html.substr(lt, lowered_close.size())) == lowered_close) {
              k = TagEnd(html, lt);
              break;
            }
            k = lt + 2;
          }
          i = k;
          raw.push_back('\n');
          continue;
        }
        if (std::find(kBlockElements.begin(), kBlockElements.end(), name) !=
            kBlockElements.end()) {
          raw.push_back('\n');
        }
        continue;
      }
    }
    if (c == '&') {
      const std::size_t next = DecodeReference(html, i, &raw);
      if (next != i) {
        i = next;
        continue;
      }
    }
    raw.push_back(c == '\n' ? ' ' : c);
    ++i;
  }
  return collapse_whitespace(raw);
}

}  // namespace veriscope
