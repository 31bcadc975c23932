#ifndef VERISCOPE_LABEL_H_
#define VERISCOPE_LABEL_H_

#include <string_view>

#include "veriscope/error.h"

namespace veriscope {

// Class index 0 is false, 1 is true everywhere (softmax outputs, confusion
// matrices). The SVM uses the signed encoding false = -1, true = +1.
enum class Label { kFalse = 0, kTrue = 1 };

inline std::string_view LabelName(Label label) {
  return label == Label::kTrue ? "true" : "false";
}

inline Label ParseLabel(std::string_view text) {
  if (text == "true") return Label::kTrue;
  if (text == "false") return Label::kFalse;
  ThrowInvalid("unknown label '" + std::string(text) + "'");
}

inline int LabelSign(Label label) { return label == Label::kTrue ? 1 : -1; }
inline int LabelIndex(Label label) { return static_cast<int>(label); }
inline Label LabelFromIndex(int index) { return index == 1 ? Label::kTrue : Label::kFalse; }

}  // namespace veriscope

#endif  // VERISCOPE_LABEL_H_
