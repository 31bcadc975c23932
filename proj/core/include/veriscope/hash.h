#ifndef VERISCOPE_HASH_H_
#define VERISCOPE_HASH_H_

#include <string>
#include <string_view>

namespace veriscope {

// Lowercase hex SHA-256 digest.
std::string Sha256Hex(std::string_view data);

}  // namespace veriscope

#endif  // VERISCOPE_HASH_H_
