#ifndef FADER_HASH_H_
#define FADER_HASH_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace fader {

// FNV-1a, 64-bit. Used for subword bucketing and seed derivation; the
// constants are fixed so hashed models are portable.
constexpr std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Lower-case hex SHA-256 of a byte string / of a file's contents.
std::string Sha256Hex(std::string_view bytes);
std::string Sha256File(const std::string& path);

}  // namespace fader

#endif  // FADER_HASH_H_
