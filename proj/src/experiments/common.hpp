#pragma once

#include <cstdint>
#include <string_view>

#include "grwlim/random.hpp"

namespace grwlim::experiments::detail {

constexpr std::uint64_t tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline StreamKey key(std::uint64_t seed, std::string_view name) { return StreamKey{seed, tag(name)}; }

}  // namespace grwlim::experiments::detail
