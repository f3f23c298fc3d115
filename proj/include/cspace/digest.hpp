#pragma once

#include <cstdint>
#include <cstring>
#include <string>

namespace cspace {

// 64-bit FNV-1a. Used for provenance digests (weights, configs, files),
// not for security.
class Fnv1a64 {
 public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001B3ull;
    }
  }

  template <typename T>
  void update_value(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    update(&v, sizeof(T));
  }

  std::uint64_t value() const { return hash_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t h = hash_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = digits[h & 0xF];
      h >>= 4;
    }
    return out;
  }

 private:
  std::uint64_t hash_ = 0xCBF29CE484222325ull;
};

inline std::string digest_bytes(const void* data, std::size_t len) {
  Fnv1a64 h;
  h.update(data, len);
  return h.hex();
}

}  // namespace cspace
