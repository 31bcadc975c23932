#ifndef VERISCOPE_RETRIEVE_H_
#define VERISCOPE_RETRIEVE_H_

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veriscope/querygen.h"

namespace veriscope {

enum class Engine { kGoogle, kBing, kFixture };

std::string_view EngineName(Engine engine);
Engine ParseEngine(std::string_view name);

struct SearchResult {
  int rank = 1;  // 1-based position in the engine's result list
  std::string url;
  std::string snippet;
  std::optional<std::string> page_text;
  Engine engine = Engine::kFixture;

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

inline constexpr std::size_t kMaxHits = 10;

// Evidence gathered from one engine for one claim.
struct EngineEvidence {
  bool searched = false;
  std::vector<SearchResult> results;  // at most kMaxHits, ranks increasing
  Query query_used;
  int relaxations_applied = 0;
  int searches_issued = 0;

  friend bool operator==(const EngineEvidence&, const EngineEvidence&) = default;
};

struct EvidenceBundle {
  std::string claim_id;
  Query query;  // the query before any relaxation
  EngineEvidence google;
  EngineEvidence bing;

  // Engine slot; kFixture is not a slot.
  const EngineEvidence& For(Engine slot) const;
  EngineEvidence& For(Engine slot);

  friend bool operator==(const EvidenceBundle&, const EvidenceBundle&) = default;
};

std::string BundleToJson(const EvidenceBundle& bundle);
EvidenceBundle BundleFromJson(std::string_view json);

// One JSON file per claim under a directory.
class EvidenceStore {
 public:
  explicit EvidenceStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void Save(const EvidenceBundle& bundle) const;
  std::optional<EvidenceBundle> Load(std::string_view claim_id) const;
  std::filesystem::path PathFor(std::string_view claim_id) const;

 private:
  std::filesystem::path dir_;
};

// Registrable-domain filter. Blacklist drops listed domains (and their
// subdomains); whitelist keeps only them.
class DomainPolicy {
 public:
  enum class Mode { kBlacklist, kWhitelist };

  DomainPolicy() = default;
  DomainPolicy(Mode mode, std::set<std::string> domains);

  // One domain per line, '#' comments.
  static DomainPolicy LoadFile(Mode mode, const std::string& path);

  Mode mode() const { return mode_; }
  const std::set<std::string>& domains() const { return domains_; }

  bool Listed(std::string_view url) const;
  bool Allows(std::string_view url) const;

 private:
  Mode mode_ = Mode::kBlacklist;
  std::set<std::string> domains_;
};

// Lowercase host of an http(s) URL, without port or trailing dot. Empty when
// the URL is not well formed.
std::string UrlHost(std::string_view url);

// Normalized query key: lowercase tokens joined by single spaces.
std::string NormalizeQuery(const Query& query);
std::string NormalizeQuery(std::string_view text);

class SearchProvider {
 public:
  virtual ~SearchProvider() = default;

  // The engine slot this provider fills in an EvidenceBundle.
  virtual Engine slot() const = 0;

  // Results in engine rank order, at most max_hits. Transport failures throw
  // kRetryable.
  virtual std::vector<SearchResult> Search(const Query& query, std::size_t max_hits) = 0;
};

struct FetchedPage {
  std::string body;
  std::string content_type;  // media type without parameters, lowercase
};

class PageFetcher {
 public:
  virtual ~PageFetcher() = default;

  // nullopt when the page cannot be retrieved.
  virtual std::optional<FetchedPage> Fetch(const std::string& url) = 0;

  std::size_t fetch_count() const { return fetch_count_.load(); }

 protected:
  void CountFetch() { ++fetch_count_; }

 private:
  std::atomic<std::size_t> fetch_count_{0};
};

// File-backed stand-in for a search engine.
// Layout: <root>/<engine>/<sha256(normalized query)>.json holding
// {"query": ..., "results": [{"rank", "url", "snippet", "page_file"?}]}, with
// page bodies in files named by page_file relative to the JSON file.
class FixtureProvider : public SearchProvider, public PageFetcher {
 public:
  FixtureProvider(std::filesystem::path root, Engine slot);

  Engine slot() const override { return slot_; }
  std::vector<SearchResult> Search(const Query& query, std::size_t max_hits) override;
  std::optional<FetchedPage> Fetch(const std::string& url) override;

  std::size_t search_count() const { return search_count_.load(); }

  static std::filesystem::path FixturePath(const std::filesystem::path& root,
                                           Engine slot, const Query& query);

 private:
  void IndexPages();

  std::filesystem::path dir_;
  Engine slot_;
  std::atomic<std::size_t> search_count_{0};
  std::once_flag indexed_;
  std::map<std::string, std::filesystem::path> pages_;
};

struct FixtureHit {
  std::string url;
  std::string snippet;
  std::optional<std::string> page_html;
};

// Writes one fixture entry (and its page files) for a query.
void write_fixture(const std::filesystem::path& root, Engine slot,
                   const Query& query, std::span<const FixtureHit> hits);

// Keeps results the policy allows. Ranks are not renumbered.
std::vector<SearchResult> filter_domains(std::span<const SearchResult> results,
                                         const DomainPolicy& policy);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  // Injected so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Provider search with bounded retries on kRetryable and exponential backoff.
std::vector<SearchResult> search(SearchProvider& provider, const Query& query,
                                 std::size_t max_hits = kMaxHits,
                                 const RetryPolicy& retry = {});

// Search, filter, and on an empty result list drop trailing query tokens
// one at a time until something survives or one token is left.
EngineEvidence retrieve_with_relaxation(SearchProvider& provider, const Query& query,
                                        const DomainPolicy& policy,
                                        const RetryPolicy& retry = {});

// Fetches a URL and strips it to visible text. Throws kInvalidArgument for
// a malformed URL and kPageUnavailable when the fetch fails or the body is
// not HTML or plain text.
std::string fetch_page(const std::string& url, PageFetcher& fetcher);

// Fills page_text of each result, fetching with bounded parallelism.
// Unavailable pages keep page_text empty.
void fetch_pages(std::span<SearchResult> results, PageFetcher& fetcher,
                 std::size_t parallelism = 4);

struct EngineSource {
  SearchProvider* provider = nullptr;
  PageFetcher* fetcher = nullptr;  // may be null when pages are not wanted
};

struct CollectOptions {
  DomainPolicy policy;
  bool fetch_pages = true;
  std::size_t parallelism = 4;
  RetryPolicy retry;
};

EvidenceBundle collect_evidence(std::string claim_id, const Query& query,
                                std::span<const EngineSource> sources,
                                const CollectOptions& options);

}  // namespace veriscope

#endif  // VERISCOPE_RETRIEVE_H_
