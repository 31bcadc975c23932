#ifndef VERISCOPE_HTML_H_
#define VERISCOPE_HTML_H_

#include <string>
#include <string_view>

namespace veriscope {

// Visible text of an HTML document: script/style/noscript/template bodies and
// comments are removed, tags are dropped, block-level elements become line
// breaks, character references are decoded, and whitespace is collapsed
// (single spaces inside a line, no blank lines, no leading/trailing space).
std::string html_to_text(std::string_view html);

// Only the whitespace collapsing step of html_to_text.
std::string collapse_whitespace(std::string_view text);

// Decodes named and numeric character references.
std::string decode_entities(std::string_view text);

}  // namespace veriscope

#endif  // VERISCOPE_HTML_H_
