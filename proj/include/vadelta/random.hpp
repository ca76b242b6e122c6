#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vadelta {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to decorrelate derived seeds.
std::uint64_t mixSeed(std::uint64_t x) noexcept;

/// Derives a child seed from a parent seed and a stage name, optionally
/// indexed (replication number, contract id). Every random draw in the
/// harness goes through this so any stage can be reproduced in isolation.
std::uint64_t deriveSeed(std::uint64_t parent, std::string_view stage,
                         std::uint64_t index = 0) noexcept;

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

}  // namespace vadelta
