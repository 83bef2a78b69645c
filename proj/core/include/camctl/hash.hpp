#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>
#include <type_traits>

namespace camctl {

/// FNV-1a, 64-bit. Used for artifact fingerprints, not security.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void update(std::span<const T> values) noexcept {
    update(values.data(), values.size_bytes());
  }
  template <typename T>
    requires std::is_arithmetic_v<T>
  void update_value(T v) noexcept {
    update(&v, sizeof(v));
  }
  void update(std::string_view s) noexcept { update(s.data(), s.size()); }
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace camctl
