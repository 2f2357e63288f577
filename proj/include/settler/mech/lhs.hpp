#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace settler::mech {

/// Latin hypercube design in [0, 1)^dims, row-major (n x dims). Each column
/// has exactly one point per stratum [i/n, (i+1)/n). Deterministic per seed.
std::vector<double> latin_hypercube(std::size_t n, std::size_t dims, std::uint64_t seed);

/// Stable per-item seed derivation (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace settler::mech
