#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nd {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Independent seed for a named sub-stream; same (seed, stream) always gives
/// the same result.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view s);

}  // namespace nd
