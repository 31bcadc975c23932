#ifndef VERISCOPE_CACHE_H_
#define VERISCOPE_CACHE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace veriscope {

// Content-addressed on-disk cache. Entries are keyed by (namespace, key),
// typically (engine, normalized query) or ("page", url). Each file records a
// digest of its payload; an entry that fails the check is evicted and reported
// as a miss. Writes go to a temporary file that is renamed into place, so
// concurrent readers never observe a partial entry.
class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path dir);

  std::optional<std::string> Get(std::string_view ns, std::string_view key) const;
  void Put(std::string_view ns, std::string_view key, std::string_view payload) const;

  std::filesystem::path PathFor(std::string_view ns, std::string_view key) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace veriscope

#endif  // VERISCOPE_CACHE_H_
