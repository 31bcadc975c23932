#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "veriscope/web.h"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "veriscope/error.h"
#include "veriscope/text.h"

namespace veriscope {

using nlohmann::json;

namespace {

constexpr char kUserAgent[] = "veriscope/0.1 (+evidence retrieval)";

std::string Env(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // path + query, at least "/"
};

std::optional<SplitUrl> Split(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) return std::nullopt;
  const auto slash = url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : url.substr(slash);
  if (auto hash = out.path.find('#'); hash != std::string::npos) out.path.resize(hash);
  return out;
}

httplib::Result Get(const std::string& origin, const std::string& path,
                    const httplib::Headers& headers) {
  httplib::Client client(origin);
  client.set_follow_location(true);
  client.set_connection_timeout(10);
  client.set_read_timeout(20);
  client.set_default_headers({{"User-Agent", kUserAgent}});
  return client.Get(path, headers);
}

// 429 and 5xx are worth retrying; other failures are not.
json GetJson(const std::string& origin, const std::string& path,
             const httplib::Headers& headers) {
  auto res = Get(origin, path, headers);
  if (!res) {
    throw Error(ErrorCode::kRetryable,
                origin + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw Error(ErrorCode::kRetryable, origin + ": HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kIoError, origin + ": HTTP " + std::to_string(res->status));
  }
  json j = json::parse(res->body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kRetryable, origin + ": malformed JSON");
  return j;
}

}  // namespace

LiveCredentials LiveCredentials::FromEnvironment() {
  return {Env("VERISCOPE_GOOGLE_KEY"), Env("VERISCOPE_GOOGLE_CX"),
          Env("VERISCOPE_BING_KEY"), Env("VERISCOPE_CACHE_DIR")};
}

std::vector<SearchResult> GoogleProvider::Search(const Query& query,
                                                 std::size_t max_hits) {
  const std::string num = std::to_string(std::min<std::size_t>(max_hits, 10));
  const std::string path = "/customsearch/v1?" +
                           httplib::detail::params_to_query_str(
                               {{"key", key_}, {"cx", cx_}, {"q", query.Text()}, {"num", num}});
  const json j = GetJson("https://www.googleapis.com", path, {});
  std::vector<SearchResult> results;
  if (!j.contains("items")) return results;
  for (const json& item : j["items"]) {
    if (results.size() >= max_hits) break;
    SearchResult r;
    r.rank = static_cast<int>(results.size()) + 1;
    r.url = item.value("link", "");
    r.snippet = item.value("snippet", "");
    r.engine = Engine::kGoogle;
    if (!r.url.empty()) results.push_back(std::move(r));
  }
  return results;
}

std::vector<SearchResult> BingProvider::Search(const Query& query, std::size_t max_hits) {
  const std::string count = std::to_string(std::min<std::size_t>(max_hits, 50));
  const std::string path =
      "/v7.0/search?" + httplib::detail::params_to_query_str(
                            {{"q", query.Text()}, {"count", count}, {"responseFilter", "Webpages"}});
  const json j = GetJson("https://api.bing.microsoft.com", path,
                         {{"Ocp-Apim-Subscription-Key", key_}});
  std::vector<SearchResult> results;
  if (!j.contains("webPages")) return results;
  for (const json& item : j["webPages"].value("value", json::array())) {
    if (results.size() >= max_hits) break;
    SearchResult r;
    r.rank = static_cast<int>(results.size()) + 1;
    r.url = item.value("url", "");
    r.snippet = item.value("snippet", "");
    r.engine = Engine::kBing;
    if (!r.url.empty()) results.push_back(std::move(r));
  }
  return results;
}

std::optional<FetchedPage> HttpFetcher::Fetch(const std::string& url) {
  CountFetch();
  auto parts = Split(url);
  if (!parts) return std::nullopt;
  auto res = Get(parts->origin, parts->path, {});
  if (!res || res->status < 200 || res->status >= 300) return std::nullopt;
  std::string type = res->get_header_value("Content-Type");
  type = FoldCase(type.substr(0, type.find(';')));
  while (!type.empty() && type.back() == ' ') type.pop_back();
  return FetchedPage{res->body, type};
}

std::string ResultsToJson(const std::vector<SearchResult>& results) {
  json arr = json::array();
  for (const SearchResult& r : results) {
    arr.push_back({{"rank", r.rank},
                   {"url", r.url},
                   {"snippet", r.snippet},
                   {"engine", std::string(EngineName(r.engine))}});
  }
  return arr.dump();
}

std::vector<SearchResult> ResultsFromJson(std::string_view text) {
  const json arr = json::parse(text);
  std::vector<SearchResult> results;
  for (const json& j : arr) {
    SearchResult r;
    r.rank = j.at("rank").get<int>();
    r.url = j.at("url").get<std::string>();
    r.snippet = j.value("snippet", "");
    r.engine = ParseEngine(j.value("engine", "fixture"));
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<SearchResult> CachedProvider::Search(const Query& query,
                                                 std::size_t max_hits) {
  const std::string ns(EngineName(slot()));
  const std::string key = NormalizeQuery(query);
  if (auto hit = cache_.Get(ns, key)) {
    try {
      auto results = ResultsFromJson(*hit);
      if (results.size() > max_hits) results.resize(max_hits);
      return results;
    } catch (const json::exception&) {
      // Fall through to the network.
    }
  }
  auto results = inner_->Search(query, max_hits);
  cache_.Put(ns, key, ResultsToJson(results));
  return results;
}

std::optional<FetchedPage> CachedFetcher::Fetch(const std::string& url) {
  CountFetch();
  if (auto hit = cache_.Get("page", url)) {
    const auto newline = hit->find('\n');
    if (newline != std::string::npos) {
      return FetchedPage{hit->substr(newline + 1), hit->substr(0, newline)};
    }
  }
  auto page = inner_->Fetch(url);
  if (page) cache_.Put("page", url, page->content_type + "\n" + page->body);
  return page;
}

}  // namespace veriscope
