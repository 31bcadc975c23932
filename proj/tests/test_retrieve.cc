#include <chrono>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "veriscope/cache.h"
#include "veriscope/hash.h"
#include "veriscope/html.h"
#include "veriscope/retrieve.h"
#include "veriscope/web.h"

namespace veriscope {
namespace {

using testing::CodeOf;
using testing::TempDir;

Query Q(std::initializer_list<const char*> tokens) {
  Query q;
  for (const char* t : tokens) q.tokens.emplace_back(t);
  return q;
}

SearchResult Hit(int rank, std::string url) {
  SearchResult r;
  r.rank = rank;
  r.url = std::move(url);
  r.snippet = "snippet " + std::to_string(rank);
  return r;
}

std::vector<FixtureHit> Hits(int n, const std::string& host = "news.example") {
  std::vector<FixtureHit> hits;
  for (int i = 1; i <= n; ++i) {
    hits.push_back({"https://" + host + "/" + std::to_string(i), "text " + std::to_string(i),
                    std::nullopt});
  }
  return hits;
}

// Fails a set number of times with a retryable error before answering.
class FlakyProvider : public SearchProvider {
 public:
  explicit FlakyProvider(int failures) : failures_(failures) {}
  Engine slot() const override { return Engine::kGoogle; }
  std::vector<SearchResult> Search(const Query&, std::size_t) override {
    ++calls;
    if (failures_-- > 0) throw Error(ErrorCode::kRetryable, "transport");
    return {Hit(1, "https://a.example/")};
  }
  int calls = 0;

 private:
  int failures_;
};

class MapFetcher : public PageFetcher {
 public:
  std::optional<FetchedPage> Fetch(const std::string& url) override {
    CountFetch();
    auto it = pages.find(url);
    if (it == pages.end()) return std::nullopt;
    return it->second;
  }
  std::map<std::string, FetchedPage> pages;
};

TEST_CASE("sha256 known vector") {
  CHECK(Sha256Hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("html_to_text") {
  CHECK(html_to_text("<p>Hello</p><script>x</script>") == "Hello");
  CHECK(html_to_text("plain   text\n\n here") == "plain text here");
  CHECK(html_to_text("<div>a</div><div>b &amp; c&#39;s &#x41;</div><!-- hidden -->") ==
        "a\nb & c's A");
  CHECK(html_to_text("<style>p{}</style><b>bold</b> move") == "bold move");
  CHECK(decode_entities("&lt;&gt;&quot;&nbsp;&#8217;") == "<>\" \xE2\x80\x99");
  CHECK(collapse_whitespace("  a \t b  ") == "a b");
}

TEST_CASE("url hosts and domain policies") {
  CHECK(UrlHost("https://News.Example:8080/a?b") == "news.example");
  CHECK(UrlHost("not a url").empty());

  const DomainPolicy black(DomainPolicy::Mode::kBlacklist, {"bad.com"});
  const std::vector<SearchResult> mixed = {Hit(1, "http://bad.com/x"),
                                           Hit(2, "http://ok.com/y"),
                                           Hit(3, "http://www.bad.com/z")};
  const auto kept = filter_domains(mixed, black);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].url == "http://ok.com/y");
  CHECK(kept[0].rank == 2);

  const DomainPolicy white(DomainPolicy::Mode::kWhitelist, {"gov.qa"});
  const auto only = filter_domains(
      std::vector<SearchResult>{Hit(1, "https://portal.gov.qa/"), Hit(2, "https://other.com/")},
      white);
  REQUIRE(only.size() == 1);
  CHECK(only[0].url == "https://portal.gov.qa/");

  CHECK(filter_domains(mixed, DomainPolicy()) == mixed);
  CHECK_FALSE(black.Listed("http://notbad.com/"));
}

TEST_CASE("disk cache") {
  TempDir dir("cache");
  const DiskCache cache(dir.path());
  CHECK_FALSE(cache.Get("google", "cold").has_value());

  const std::string payload("bytes\0with\nnul", 14);
  cache.Put("google", "k", payload);
  CHECK(cache.Get("google", "k") == payload);
  CHECK_FALSE(cache.Get("bing", "k").has_value());

  cache.Put("google", "k", "second");
  CHECK(cache.Get("google", "k") == "second");

  {
    std::ofstream out(cache.PathFor("google", "k"), std::ios::binary | std::ios::trunc);
    out << "VSC1 deadbeef 6\nsecond";
  }
  CHECK_FALSE(cache.Get("google", "k").has_value());
  CHECK_FALSE(std::filesystem::exists(cache.PathFor("google", "k")));
}

TEST_CASE("fixture search") {
  TempDir dir("fixture");
  write_fixture(dir.path(), Engine::kGoogle, Q({"three", "hits"}), Hits(3));
  write_fixture(dir.path(), Engine::kGoogle, Q({"twelve", "hits"}), Hits(12));
  FixtureProvider provider(dir.path(), Engine::kGoogle);

  const auto three = search(provider, Q({"Three", "hits"}));
  REQUIRE(three.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(three[i].rank == i + 1);
  CHECK(search(provider, Q({"twelve", "hits"})).size() == 10);
  CHECK(search(provider, Q({"unknown"})).empty());
  CHECK(provider.search_count() == 3);
  CHECK(CodeOf([&] { search(provider, Query{}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("search retries with exponential backoff") {
  std::vector<long> sleeps;
  RetryPolicy retry;
  retry.sleep = [&](std::chrono::milliseconds ms) { sleeps.push_back(ms.count()); };

  FlakyProvider recovers(2);
  CHECK(search(recovers, Q({"a"}), 10, retry).size() == 1);
  CHECK(recovers.calls == 3);
  CHECK(sleeps == std::vector<long>{250, 500});

  sleeps.clear();
  FlakyProvider broken(100);
  CHECK(CodeOf([&] { search(broken, Q({"a"}), 10, retry); }) == ErrorCode::kRetryable);
  CHECK(broken.calls == 3);
  CHECK(sleeps.size() == 2);
}

TEST_CASE("retrieve_with_relaxation") {
  TempDir dir("relax");
  write_fixture(dir.path(), Engine::kBing, Q({"a", "b", "c", "d"}), Hits(2));
  write_fixture(dir.path(), Engine::kBing, Q({"w", "x"}), Hits(1));
  write_fixture(dir.path(), Engine::kBing, Q({"w", "x", "y"}), Hits(2, "bad.com"));
  FixtureProvider provider(dir.path(), Engine::kBing);
  const DomainPolicy policy(DomainPolicy::Mode::kBlacklist, {"bad.com"});

  const auto first = retrieve_with_relaxation(provider, Q({"a", "b", "c", "d"}), policy);
  CHECK(first.relaxations_applied == 0);
  CHECK(first.results.size() == 2);

  // The 3-token prefix only has filtered hits, so relaxation continues.
  const auto prefix = retrieve_with_relaxation(provider, Q({"w", "x", "y", "z"}), policy);
  CHECK(prefix.relaxations_applied == 2);
  CHECK(prefix.query_used.tokens == std::vector<std::string>{"w", "x"});
  CHECK(prefix.searches_issued == 3);

  const auto none = retrieve_with_relaxation(provider, Q({"p", "q", "r", "s"}), policy);
  CHECK(none.results.empty());
  CHECK(none.relaxations_applied == 3);
  CHECK(none.searches_issued == 4);
}

TEST_CASE("fetch_page") {
  MapFetcher fetcher;
  fetcher.pages["https://a.example/"] = {"<p>Hello</p><script>x</script>", "text/html"};
  fetcher.pages["https://a.example/t"] = {" plain  text ", "text/plain"};
  fetcher.pages["https://a.example/pdf"] = {"%PDF", "application/pdf"};
  CHECK(fetch_page("https://a.example/", fetcher) == "Hello");
  CHECK(fetch_page("https://a.example/t", fetcher) == "plain text");
  CHECK(CodeOf([&] { fetch_page("https://a.example/pdf", fetcher); }) ==
        ErrorCode::kPageUnavailable);
  CHECK(CodeOf([&] { fetch_page("https://a.example/missing", fetcher); }) ==
        ErrorCode::kPageUnavailable);
  CHECK(CodeOf([&] { fetch_page("no scheme", fetcher); }) == ErrorCode::kInvalidArgument);

  HttpFetcher http;
  CHECK(CodeOf([&] { fetch_page("http://127.0.0.1:1/", http); }) ==
        ErrorCode::kPageUnavailable);
}

TEST_CASE("collect_evidence is reproducible and honours fetch_pages") {
  TempDir dir("collect");
  auto hits = Hits(3);
  hits[0].page_html = "<p>First page.</p>";
  const Query q = Q({"alpha", "beta"});
  write_fixture(dir.path(), Engine::kGoogle, q, hits);

  auto run = [&](bool pages) {
    FixtureProvider provider(dir.path(), Engine::kGoogle);
    const EngineSource source{&provider, &provider};
    CollectOptions options;
    options.fetch_pages = pages;
    EvidenceBundle b = collect_evidence("c1", q, std::span(&source, 1), options);
    return std::make_pair(b, provider.fetch_count());
  };
  const auto [a, fetched_a] = run(true);
  const auto [b, fetched_b] = run(true);
  CHECK(a == b);
  CHECK(BundleToJson(a) == BundleToJson(b));
  CHECK(fetched_a == 3);
  CHECK(a.google.results[0].page_text == "First page.");
  CHECK_FALSE(a.google.results[1].page_text.has_value());
  CHECK_FALSE(a.bing.searched);

  const auto [snips, fetched] = run(false);
  CHECK(fetched == 0);
  CHECK_FALSE(snips.google.results[0].page_text.has_value());

  CHECK(BundleFromJson(BundleToJson(a)) == a);

  TempDir store_dir("store");
  const EvidenceStore store(store_dir.path());
  store.Save(a);
  CHECK(store.Load("c1") == a);
  CHECK_FALSE(store.Load("c2").has_value());
}

TEST_CASE("cached provider answers from the cache") {
  TempDir dir("cached");
  auto inner = std::make_unique<FlakyProvider>(0);
  FlakyProvider* raw = inner.get();
  CachedProvider cached(std::move(inner), DiskCache(dir.path()));
  const auto first = cached.Search(Q({"a"}), 10);
  const auto second = cached.Search(Q({"A"}), 10);
  CHECK(first == second);
  CHECK(raw->calls == 1);
  CHECK(ResultsFromJson(ResultsToJson(first)) == first);
}

}  // namespace
}  // namespace veriscope
