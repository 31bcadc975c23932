#include "veriscope/cache.h"

#include <atomic>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include "veriscope/error.h"
#include "veriscope/hash.h"

namespace veriscope {

namespace {

constexpr std::string_view kMagic = "VSC1";

std::string ReadAll(const std::filesystem::path& path, bool* ok) {
  std::ifstream in(path, std::ios::binary);
  *ok = static_cast<bool>(in);
  if (!*ok) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create cache dir " + dir_.string());
}

std::filesystem::path DiskCache::PathFor(std::string_view ns,
                                         std::string_view key) const {
  std::string material(ns);
  material += '\x1f';
  material += key;
  const std::string digest = Sha256Hex(material);
  return dir_ / digest.substr(0, 2) / digest;
}

std::optional<std::string> DiskCache::Get(std::string_view ns,
                                          std::string_view key) const {
  const auto path = PathFor(ns, key);
  bool ok = false;
  std::string content = ReadAll(path, &ok);
  if (!ok) return std::nullopt;

  // Layout: "VSC1 <sha256 hex> <size>\n" followed by the payload.
  const auto newline = content.find('\n');
  bool valid = newline != std::string::npos;
  std::string payload;
  if (valid) {
    std::istringstream header(content.substr(0, newline));
    std::string magic, digest;
    std::size_t size = 0;
    header >> magic >> digest >> size;
    payload = content.substr(newline + 1);
    valid = magic == kMagic && size == payload.size() && Sha256Hex(payload) == digest;
  }
  if (!valid) {
    std::error_code ec;
    std::filesystem::remove(path, ec);
    return std::nullopt;
  }
  return payload;
}

void DiskCache::Put(std::string_view ns, std::string_view key,
                    std::string_view payload) const {
  static std::atomic<unsigned long> counter{0};
  const auto path = PathFor(ns, key);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
         "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write cache entry " + tmp.string());
    out << kMagic << ' ' << Sha256Hex(payload) << ' ' << payload.size() << '\n';
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw Error(ErrorCode::kIoError, "short write " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot install cache entry " + path.string());
  }
}

}  // namespace veriscope
