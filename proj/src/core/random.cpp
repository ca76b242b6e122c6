#include "vadelta/random.hpp"

namespace vadelta {

std::uint64_t mixSeed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) noexcept {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t deriveSeed(std::uint64_t parent, std::string_view stage,
                         std::uint64_t index) noexcept {
  return mixSeed(mixSeed(parent ^ fnv1a(stage)) + index);
}

}  // namespace vadelta
