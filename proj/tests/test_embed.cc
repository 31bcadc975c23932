#include <algorithm>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "veriscope/embed.h"
#include "veriscope/rng.h"

namespace veriscope {
namespace {

using testing::Toks;

EmbeddingTable Parse(const std::string& text) {
  std::istringstream in(text);
  return load_embeddings(in, "inline");
}

TEST_CASE("load_embeddings") {
  const EmbeddingTable t = Parse("a 1 2 3\nb 4 5 6\n");
  CHECK(t.dimension() == 3);
  CHECK(t.size() == 2);
  CHECK(t.Lookup("b")[2] == 6.0);
  CHECK(t.Lookup("zzz").empty());

  try {
    Parse("a 1 2 3\nb 1 2 3 4\n");
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }

  const EmbeddingTable dup = Parse("a 1 1\na 9 9\n");
  CHECK(dup.size() == 1);
  CHECK(dup.Lookup("a")[0] == 1.0);

  CHECK(testing::CodeOf([] { Parse(""); }) == ErrorCode::kFormatError);
  CHECK(testing::CodeOf([] { Parse("a 1 x\n"); }) == ErrorCode::kFormatError);
  CHECK(Parse("2 2\na 1 2\nb 3 4\n").size() == 2);
}

TEST_CASE("bundled embeddings load") {
  const EmbeddingTable t =
      load_embeddings_file((testing::kDataDir / "embeddings.txt").string());
  CHECK(t.dimension() == 8);
  CHECK(t.size() >= 150);
}

TEST_CASE("avg_embedding") {
  const EmbeddingTable t = Parse("w 1 2 3\n");
  const TextEmbedding one = avg_embedding(Toks({"w"}), t);
  CHECK(one.vector == std::vector<double>{1, 2, 3});
  CHECK(one.coverage == 1.0);

  const EmbeddingTable uv = Parse("u 0 0\nv 2 4\n");
  CHECK(avg_embedding(Toks({"u", "v"}), uv).vector == std::vector<double>{1, 2});
  CHECK(avg_embedding(Toks({"U", "oov"}), uv).coverage == 0.5);

  const TextEmbedding none = avg_embedding(Toks({"oov1", "oov2"}), t);
  CHECK(none.vector == std::vector<double>{0, 0, 0});
  CHECK(none.coverage == 0.0);
}

TEST_CASE("avg_embedding is permutation invariant and bounded") {
  Rng rng(11);
  std::ostringstream table_text;
  for (int w = 0; w < 20; ++w) {
    table_text << "w" << w;
    for (int k = 0; k < 4; ++k) table_text << ' ' << rng.Uniform(-3, 3);
    table_text << '\n';
  }
  const EmbeddingTable t = Parse(table_text.str());
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Token> tokens;
    const std::size_t n = 1 + rng.Below(8);
    for (std::size_t i = 0; i < n; ++i) {
      Token tok;
      tok.surface = tok.lower = "w" + std::to_string(rng.Below(25));
      tokens.push_back(tok);
    }
    const TextEmbedding a = avg_embedding(tokens, t);
    std::vector<Token> shuffled = tokens;
    rng.Shuffle(std::span<Token>(shuffled));
    const TextEmbedding b = avg_embedding(shuffled, t);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(a.vector[k] == doctest::Approx(b.vector[k]).epsilon(1e-12));
      double lo = 1e9, hi = -1e9;
      for (const Token& tok : tokens) {
        const auto row = t.Lookup(tok.lower);
        if (row.empty()) continue;
        lo = std::min(lo, row[k]);
        hi = std::max(hi, row[k]);
      }
      if (a.coverage > 0) {
        CHECK(a.vector[k] >= lo - 1e-12);
        CHECK(a.vector[k] <= hi + 1e-12);
      }
    }
    CHECK(a.coverage >= 0.0);
    CHECK(a.coverage <= 1.0);
  }
}

}  // namespace
}  // namespace veriscope
