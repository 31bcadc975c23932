#include "veriscope/retrieve.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "veriscope/error.h"
#include "veriscope/hash.h"
#include "veriscope/html.h"
#include "veriscope/text.h"

namespace veriscope {

using nlohmann::json;

namespace {

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view data) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

std::string ContentTypeForFile(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".txt") return "text/plain";
  return "application/octet-stream";
}

json ResultToJson(const SearchResult& r) {
  json j = {{"rank", r.rank},
            {"url", r.url},
            {"snippet", r.snippet},
            {"engine", std::string(EngineName(r.engine))}};
  if (r.page_text) j["page_text"] = *r.page_text;
  return j;
}

SearchResult ResultFromJson(const json& j) {
  SearchResult r;
  r.rank = j.at("rank").get<int>();
  r.url = j.at("url").get<std::string>();
  r.snippet = j.value("snippet", "");
  if (j.contains("page_text")) r.page_text = j.at("page_text").get<std::string>();
  r.engine = ParseEngine(j.value("engine", "fixture"));
  return r;
}

json QueryToJson(const Query& q) {
  return {{"tokens", q.tokens}, {"origin_claim_id", q.origin_claim_id}};
}

Query QueryFromJson(const json& j) {
  Query q;
  q.tokens = j.at("tokens").get<std::vector<std::string>>();
  q.origin_claim_id = j.value("origin_claim_id", "");
  return q;
}

json EngineToJson(const EngineEvidence& e) {
  json results = json::array();
  for (const SearchResult& r : e.results) results.push_back(ResultToJson(r));
  return {{"searched", e.searched},
          {"query_used", QueryToJson(e.query_used)},
          {"relaxations_applied", e.relaxations_applied},
          {"searches_issued", e.searches_issued},
          {"results", results}};
}

EngineEvidence EngineFromJson(const json& j) {
  EngineEvidence e;
  e.searched = j.value("searched", false);
  e.query_used = QueryFromJson(j.at("query_used"));
  e.relaxations_applied = j.value("relaxations_applied", 0);
  e.searches_issued = j.value("searches_issued", 0);
  for (const json& r : j.at("results")) e.results.push_back(ResultFromJson(r));
  return e;
}

void ValidateResults(const std::vector<SearchResult>& results) {
  int last = 0;
  for (const SearchResult& r : results) {
    if (r.rank < 1) ThrowInvalid("search result rank must be >= 1");
    if (r.rank <= last) ThrowInvalid("search result ranks must increase");
    if (r.url.empty()) ThrowInvalid("search result without url");
    last = r.rank;
  }
}

}  // namespace

std::string_view EngineName(Engine engine) {
  switch (engine) {
    case Engine::kGoogle: return "google";
    case Engine::kBing: return "bing";
    case Engine::kFixture: return "fixture";
  }
  return "fixture";
}

Engine ParseEngine(std::string_view name) {
  if (name == "google") return Engine::kGoogle;
  if (name == "bing") return Engine::kBing;
  if (name == "fixture") return Engine::kFixture;
  ThrowInvalid("unknown engine '" + std::string(name) + "'");
}

const EngineEvidence& EvidenceBundle::For(Engine slot) const {
  if (slot == Engine::kFixture) ThrowInvalid("fixture is not an engine slot");
  return slot == Engine::kGoogle ? google : bing;
}

EngineEvidence& EvidenceBundle::For(Engine slot) {
  if (slot == Engine::kFixture) ThrowInvalid("fixture is not an engine slot");
  return slot == Engine::kGoogle ? google : bing;
}

std::string BundleToJson(const EvidenceBundle& bundle) {
  json j = {{"claim_id", bundle.claim_id},
            {"query", QueryToJson(bundle.query)},
            {"google", EngineToJson(bundle.google)},
            {"bing", EngineToJson(bundle.bing)}};
  return j.dump(1);
}

EvidenceBundle BundleFromJson(std::string_view text) {
  EvidenceBundle b;
  try {
    const json j = json::parse(text);
    b.claim_id = j.at("claim_id").get<std::string>();
    b.query = QueryFromJson(j.at("query"));
    b.google = EngineFromJson(j.at("google"));
    b.bing = EngineFromJson(j.at("bing"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("evidence bundle: ") + e.what());
  }
  return b;
}

std::filesystem::path EvidenceStore::PathFor(std::string_view claim_id) const {
  std::string name;
  for (char c : claim_id) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                      c == '_' || c == '.';
    name += safe ? c : '_';
  }
  // Disambiguate ids that differ only in unsafe characters.
  if (name != claim_id || name.empty() || name[0] == '.') {
    name += "-" + Sha256Hex(claim_id).substr(0, 12);
  }
  return dir_ / (name + ".json");
}

void EvidenceStore::Save(const EvidenceBundle& bundle) const {
  WriteFile(PathFor(bundle.claim_id), BundleToJson(bundle));
}

std::optional<EvidenceBundle> EvidenceStore::Load(std::string_view claim_id) const {
  const auto path = PathFor(claim_id);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return BundleFromJson(ReadFile(path));
}

DomainPolicy::DomainPolicy(Mode mode, std::set<std::string> domains) : mode_(mode) {
  for (const std::string& d : domains) {
    std::string lower = FoldCase(d);
    while (!lower.empty() && lower.back() == '.') lower.pop_back();
    if (lower.empty() || lower.find_first_of("/:?#@ ") != std::string::npos) {
      ThrowInvalid("not a bare domain: '" + d + "'");
    }
    domains_.insert(std::move(lower));
  }
}

DomainPolicy DomainPolicy::LoadFile(Mode mode, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open domain list " + path);
  std::set<std::string> domains;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string d;
    if (fields >> d) domains.insert(d);
  }
  return DomainPolicy(mode, std::move(domains));
}

std::string UrlHost(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) return {};
  const std::string_view proto = url.substr(0, scheme);
  if (FoldCase(proto) != "http" && FoldCase(proto) != "https") return {};
  std::string_view rest = url.substr(scheme + 3);
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = rest.rfind('@'); at != std::string_view::npos) rest.remove_prefix(at + 1);
  if (auto colon = rest.find(':'); colon != std::string_view::npos) {
    rest = rest.substr(0, colon);
  }
  std::string host = FoldCase(rest);
  while (!host.empty() && host.back() == '.') host.pop_back();
  return host;
}

bool DomainPolicy::Listed(std::string_view url) const {
  const std::string host = UrlHost(url);
  if (host.empty()) return false;
  for (std::size_t pos = 0;;) {
    if (domains_.count(host.substr(pos))) return true;
    pos = host.find('.', pos);
    if (pos == std::string::npos) return false;
    ++pos;
  }
}

bool DomainPolicy::Allows(std::string_view url) const {
  const bool listed = Listed(url);
  return mode_ == Mode::kBlacklist ? !listed : listed;
}

std::string NormalizeQuery(const Query& query) {
  std::string out;
  for (const std::string& t : query.tokens) {
    for (const std::string& w : lower_words(t)) {
      if (!out.empty()) out += ' ';
      out += w;
    }
  }
  return out;
}

std::string NormalizeQuery(std::string_view text) {
  Query q;
  q.tokens = lower_words(text);
  return NormalizeQuery(q);
}

FixtureProvider::FixtureProvider(std::filesystem::path root, Engine slot)
    : dir_(root / std::string(EngineName(slot))), slot_(slot) {
  if (slot == Engine::kFixture) ThrowInvalid("fixture provider needs a google or bing slot");
}

std::filesystem::path FixtureProvider::FixturePath(const std::filesystem::path& root,
                                                   Engine slot, const Query& query) {
  return root / std::string(EngineName(slot)) /
         (Sha256Hex(NormalizeQuery(query)) + ".json");
}

std::vector<SearchResult> FixtureProvider::Search(const Query& query,
                                                  std::size_t max_hits) {
  if (query.empty()) ThrowInvalid("search: empty query");
  ++search_count_;
  const auto path = dir_ / (Sha256Hex(NormalizeQuery(query)) + ".json");
  if (!std::filesystem::exists(path)) return {};
  std::vector<SearchResult> results;
  try {
    const json j = json::parse(ReadFile(path));
    for (const json& hit : j.at("results")) {
      if (results.size() >= max_hits) break;
      SearchResult r;
      r.rank = hit.at("rank").get<int>();
      r.url = hit.at("url").get<std::string>();
      r.snippet = hit.value("snippet", "");
      r.engine = Engine::kFixture;
      results.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError, path.string() + ": " + e.what());
  }
  ValidateResults(results);
  return results;
}

void FixtureProvider::IndexPages() {
  if (!std::filesystem::is_directory(dir_)) return;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const json j = json::parse(ReadFile(file), nullptr, false);
    if (j.is_discarded() || !j.contains("results")) continue;
    for (const json& hit : j["results"]) {
      if (!hit.contains("page_file") || !hit.contains("url")) continue;
      pages_.emplace(hit["url"].get<std::string>(),
                     file.parent_path() / hit["page_file"].get<std::string>());
    }
  }
}

std::optional<FetchedPage> FixtureProvider::Fetch(const std::string& url) {
  std::call_once(indexed_, [this] { IndexPages(); });
  CountFetch();
  auto it = pages_.find(url);
  if (it == pages_.end() || !std::filesystem::exists(it->second)) return std::nullopt;
  return FetchedPage{ReadFile(it->second), ContentTypeForFile(it->second)};
}

void write_fixture(const std::filesystem::path& root, Engine slot,
                   const Query& query, std::span<const FixtureHit> hits) {
  const auto path = FixtureProvider::FixturePath(root, slot, query);
  const std::string stem = path.stem().string();
  json results = json::array();
  int rank = 0;
  for (const FixtureHit& hit : hits) {
    json r = {{"rank", ++rank}, {"url", hit.url}, {"snippet", hit.snippet}};
    if (hit.page_html) {
      const std::string page_file = stem + "." + std::to_string(rank) + ".html";
      WriteFile(path.parent_path() / page_file, *hit.page_html);
      r["page_file"] = page_file;
    }
    results.push_back(std::move(r));
  }
  const json j = {{"query", NormalizeQuery(query)}, {"results", results}};
  WriteFile(path, j.dump(1) + "\n");
}

std::vector<SearchResult> filter_domains(std::span<const SearchResult> results,
                                         const DomainPolicy& policy) {
  std::vector<SearchResult> kept;
  for (const SearchResult& r : results) {
    if (policy.Allows(r.url)) kept.push_back(r);
  }
  return kept;
}

std::vector<SearchResult> search(SearchProvider& provider, const Query& query,
                                 std::size_t max_hits, const RetryPolicy& retry) {
  if (query.empty()) ThrowInvalid("search: empty query");
  auto backoff = retry.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      std::vector<SearchResult> results = provider.Search(query, max_hits);
      if (results.size() > max_hits) results.resize(max_hits);
      return results;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRetryable || attempt >= retry.attempts) throw;
    }
    if (retry.sleep) {
      retry.sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff *= 2;
  }
}

EngineEvidence retrieve_with_relaxation(SearchProvider& provider, const Query& query,
                                        const DomainPolicy& policy,
                                        const RetryPolicy& retry) {
  EngineEvidence evidence;
  evidence.searched = true;
  if (query.empty()) return evidence;
  Query current = query;
  for (;;) {
    ++evidence.searches_issued;
    const auto raw = search(provider, current, kMaxHits, retry);
    evidence.results = filter_domains(raw, policy);
    evidence.query_used = current;
    if (!evidence.results.empty() || current.size() < 2) break;
    current = relax(current);
    ++evidence.relaxations_applied;
  }
  return evidence;
}

std::string fetch_page(const std::string& url, PageFetcher& fetcher) {
  if (UrlHost(url).empty()) ThrowInvalid("malformed url '" + url + "'");
  std::optional<FetchedPage> page = fetcher.Fetch(url);
  if (!page) throw Error(ErrorCode::kPageUnavailable, "cannot fetch " + url);
  const std::string& type = page->content_type;
  if (type == "text/html" || type == "application/xhtml+xml" || type.empty()) {
    return html_to_text(page->body);
  }
  if (type == "text/plain") return collapse_whitespace(page->body);
  throw Error(ErrorCode::kPageUnavailable, url + " is " + type + ", not HTML");
}

void fetch_pages(std::span<SearchResult> results, PageFetcher& fetcher,
                 std::size_t parallelism) {
  if (results.empty()) return;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      try {
        std::string text = fetch_page(results[i].url, fetcher);
        if (!text.empty()) results[i].page_text = std::move(text);
      } catch (const Error&) {
        // Snippet-only hit.
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, results.size());
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

EvidenceBundle collect_evidence(std::string claim_id, const Query& query,
                                std::span<const EngineSource> sources,
                                const CollectOptions& options) {
  EvidenceBundle bundle;
  bundle.claim_id = std::move(claim_id);
  bundle.query = query;
  for (const EngineSource& source : sources) {
    EngineEvidence evidence =
        retrieve_with_relaxation(*source.provider, query, options.policy, options.retry);
    if (options.fetch_pages && source.fetcher != nullptr) {
      fetch_pages(evidence.results, *source.fetcher, options.parallelism);
    }
    bundle.For(source.provider->slot()) = std::move(evidence);
  }
  return bundle;
}

}  // namespace veriscope
