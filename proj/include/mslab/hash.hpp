#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace mslab {

// FNV-1a 64-bit. Stable across platforms; used to key grid-derived streams
// and to checksum output files.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(s.data(), s.size());
}

}  // namespace mslab
