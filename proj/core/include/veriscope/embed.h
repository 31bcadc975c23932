#ifndef VERISCOPE_EMBED_H_
#define VERISCOPE_EMBED_H_

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "veriscope/text.h"

namespace veriscope {

// Pre-trained word vectors. Immutable once loaded.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return index_.size(); }
  const std::string& source_name() const { return source_name_; }

  // Row for a lowercase word, or an empty span when out of vocabulary.
  std::span<const double> Lookup(std::string_view word) const;

  // Dense row index for a word (insertion order), or -1.
  int IndexOf(std::string_view word) const;
  std::span<const double> Row(std::size_t index) const {
    return {values_.data() + index * dim_, dim_};
  }
  const std::vector<std::string>& words() const { return words_; }

  // Appends a row; returns false (and changes nothing) for a duplicate word.
  bool Add(std::string word, std::span<const double> vector);

  friend EmbeddingTable load_embeddings(std::istream& in, std::string source_name);

 private:
  std::size_t dim_ = 0;
  std::string source_name_;
  std::vector<std::string> words_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TextEmbedding {
  std::vector<double> vector;
  double coverage = 0.0;  // fraction of tokens found in the vocabulary
};

// Reads `token v1 ... vd` lines. A leading word2vec-style `<count> <dim>`
// header is skipped. Duplicate tokens keep the first row. Throws FormatError
// on an empty stream, a non-numeric value, or a row whose width differs from
// the first row.
EmbeddingTable load_embeddings(std::istream& in, std::string source_name = "");
EmbeddingTable load_embeddings_file(const std::string& path);

// Mean of the vectors of in-vocabulary tokens (looked up by lowercase form).
TextEmbedding avg_embedding(std::span<const Token> tokens,
                            const EmbeddingTable& table);

}  // namespace veriscope

#endif  // VERISCOPE_EMBED_H_
