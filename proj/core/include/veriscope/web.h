#ifndef VERISCOPE_WEB_H_
#define VERISCOPE_WEB_H_

#include <memory>
#include <optional>
#include <string>

#include "veriscope/cache.h"
#include "veriscope/retrieve.h"

namespace veriscope {

// Live engines. Credentials come from the environment:
//   VERISCOPE_GOOGLE_KEY, VERISCOPE_GOOGLE_CX  (Custom Search JSON API)
//   VERISCOPE_BING_KEY                         (Bing Web Search v7)
//   VERISCOPE_CACHE_DIR                        (optional response cache)
struct LiveCredentials {
  std::string google_key;
  std::string google_cx;
  std::string bing_key;
  std::string cache_dir;

  static LiveCredentials FromEnvironment();
};

class GoogleProvider : public SearchProvider {
 public:
  GoogleProvider(std::string key, std::string cx) : key_(std::move(key)), cx_(std::move(cx)) {}
  Engine slot() const override { return Engine::kGoogle; }
  std::vector<SearchResult> Search(const Query& query, std::size_t max_hits) override;

 private:
  std::string key_;
  std::string cx_;
};

class BingProvider : public SearchProvider {
 public:
  explicit BingProvider(std::string key) : key_(std::move(key)) {}
  Engine slot() const override { return Engine::kBing; }
  std::vector<SearchResult> Search(const Query& query, std::size_t max_hits) override;

 private:
  std::string key_;
};

// Plain HTTP(S) GET with a static user agent. Non-2xx responses and transport
// errors yield nullopt.
class HttpFetcher : public PageFetcher {
 public:
  std::optional<FetchedPage> Fetch(const std::string& url) override;
};

// Consults the cache before delegating; stores successful responses.
class CachedProvider : public SearchProvider {
 public:
  CachedProvider(std::unique_ptr<SearchProvider> inner, DiskCache cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}
  Engine slot() const override { return inner_->slot(); }
  std::vector<SearchResult> Search(const Query& query, std::size_t max_hits) override;

 private:
  std::unique_ptr<SearchProvider> inner_;
  DiskCache cache_;
};

class CachedFetcher : public PageFetcher {
 public:
  CachedFetcher(std::unique_ptr<PageFetcher> inner, DiskCache cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}
  std::optional<FetchedPage> Fetch(const std::string& url) override;

 private:
  std::unique_ptr<PageFetcher> inner_;
  DiskCache cache_;
};

// Serialized form used for cached search responses.
std::string ResultsToJson(const std::vector<SearchResult>& results);
std::vector<SearchResult> ResultsFromJson(std::string_view json);

}  // namespace veriscope

#endif  // VERISCOPE_WEB_H_
