#include "settler/mech/lhs.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace settler::mech {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> latin_hypercube(std::size_t n, std::size_t dims, std::uint64_t seed) {
  std::vector<double> design(n * dims);
  if (n == 0) return design;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::vector<std::size_t> perm(n);
  const double width = 1.0 / static_cast<double>(n);
  for (std::size_t d = 0; d < dims; ++d) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      design[i * dims + d] = (static_cast<double>(perm[i]) + jitter(rng)) * width;
    }
  }
  return design;
}

}  // namespace settler::mech
