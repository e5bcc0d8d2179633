#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace strides {

// 64-bit FNV-1a. Good enough to fingerprint prompts/responses in run records;
// not for anything adversarial.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest_hex(std::string_view data) {
  static const char* hexd = "0123456789abcdef";
  std::uint64_t h = fnv1a64(data);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hexd[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace strides
