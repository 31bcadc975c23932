#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "veriscope/querygen.h"
#include "veriscope/rng.h"

namespace veriscope {
namespace {

IdfTable Flat(std::initializer_list<const char*> words, std::size_t n = 10) {
  std::unordered_map<std::string, std::size_t> df;
  for (const char* w : words) df[w] = 1;
  return IdfTable(n, std::move(df));
}

TEST_CASE("build_idf closed form") {
  const std::vector<std::string> docs = {"clock bomb", "clock school"};
  const IdfTable idf = build_idf(docs);
  CHECK(idf.doc_count() == 2);
  CHECK(idf.idf("clock") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(idf.idf("bomb") == doctest::Approx(std::log(1.5) + 1).epsilon(1e-12));
  CHECK(idf.idf("unseen") == doctest::Approx(std::log(3.0) + 1).epsilon(1e-12));
  CHECK(testing::CodeOf([] { build_idf(std::vector<std::string>{}); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("idf table save/load round trip") {
  const std::vector<std::string> docs = {"a b", "b c", "c d e"};
  const IdfTable idf = build_idf(docs);
  std::stringstream s;
  idf.Save(s);
  CHECK(s.str().rfind("N=3\n", 0) == 0);
  const IdfTable back = IdfTable::Load(s);
  CHECK(back.doc_count() == 3);
  CHECK(back.frequencies() == idf.frequencies());

  std::istringstream bad("N=2\nword\t5\n");
  CHECK(testing::CodeOf([&] { IdfTable::Load(bad); }) == ErrorCode::kFormatError);
}

TEST_CASE("rank_terms") {
  const IdfTable idf = Flat({"clock", "bomb"});
  CHECK(rank_terms("of the and by", idf).empty());

  const auto ranked = rank_terms("clock clock bomb", idf);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].token == "clock");
  CHECK(ranked[0].score == doctest::Approx(2 * ranked[1].score));

  const auto tie = rank_terms("zebra apple", idf);
  REQUIRE(tie.size() == 2);
  CHECK(tie[0].token == "zebra");
  CHECK(tie[1].token == "apple");
}

TEST_CASE("generate_query composition") {
  const IdfTable idf = Flat({"police", "over", "built", "homemade"});
  const Query q = generate_query(
      "Police arrested Ahmed Mohamed in Irving over a homemade clock he built for school",
      idf, "c1");
  REQUIRE(q.size() >= 5);
  CHECK(q.size() <= 10);
  CHECK(std::vector<std::string>(q.tokens.begin(), q.tokens.begin() + 3) ==
        std::vector<std::string>{"ahmed", "mohamed", "irving"});
  CHECK(q.origin_claim_id == "c1");

  // Twelve content words with strictly decreasing idf: df_i = i + 1.
  std::unordered_map<std::string, std::size_t> df;
  std::string claim;
  std::vector<std::string> words;
  for (int i = 0; i < 12; ++i) {
    const std::string w = "word" + std::string(1, static_cast<char>('a' + i));
    words.push_back(w);
    df[w] = static_cast<std::size_t>(i + 1);
  }
  for (auto it = words.rbegin(); it != words.rend(); ++it) claim += *it + " ";
  const Query top = generate_query(claim, IdfTable(100, df));
  CHECK(top.tokens == std::vector<std::string>(words.begin(), words.begin() + 10));

  CHECK(testing::CodeOf([&] { generate_query("Of the and by", idf); }) ==
        ErrorCode::kEmptyQuery);

  const Query shorty = generate_query("clock bomb", idf);
  CHECK(shorty.tokens == std::vector<std::string>{"clock", "bomb"});
}

TEST_CASE("relax") {
  Query q;
  q.tokens = {"a", "b", "c"};
  CHECK(relax(q).tokens == std::vector<std::string>{"a", "b"});
  CHECK(relax(relax(q)).tokens == std::vector<std::string>{"a"});
  CHECK(testing::CodeOf([&] { relax(relax(relax(q))); }) == ErrorCode::kCannotRelax);
  CHECK(q.Text() == "a b c");
}

TEST_CASE("query properties on generated claims") {
  const IdfTable idf = IdfTable::LoadFile((testing::kDataDir / "idf.tsv").string());
  const std::vector<std::string> vocab = {
      "Doha", "clock", "the", "Qatar", "vaccine", "of", "arrested", "school",
      "banned", "in", "new", "a", "Irving", "secret", "report", "and", "by",
      "Ministry", "claims", "water", "is", "hoax", "deadly", "officials"};
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::string claim;
    const std::size_t n = 1 + rng.Below(16);
    for (std::size_t i = 0; i < n; ++i) claim += vocab[rng.Below(vocab.size())] + " ";

    std::set<std::string> candidates;
    for (const Token& t : content_tokens(tokenize(claim))) candidates.insert(t.lower);
    if (candidates.empty()) {
      CHECK(testing::CodeOf([&] { generate_query(claim, idf); }) == ErrorCode::kEmptyQuery);
      continue;
    }
    const Query q = generate_query(claim, idf);
    CHECK(q.size() >= std::min<std::size_t>(5, candidates.size()));
    CHECK(q.size() <= 10);
    std::set<std::string> seen;
    for (const std::string& tok : q.tokens) {
      CHECK(candidates.count(tok) == 1);
      CHECK(seen.insert(tok).second);
    }

    const auto ranked = rank_terms(claim, idf);
    for (std::size_t i = 1; i < ranked.size(); ++i) {
      CHECK(ranked[i].score <= ranked[i - 1].score);
    }

    if (q.size() >= 2) {
      const Query r = relax(q);
      CHECK(r.size() + 1 == q.size());
      CHECK(std::equal(r.tokens.begin(), r.tokens.end(), q.tokens.begin()));
    }
  }
}

}  // namespace
}  // namespace veriscope
