#include "hgkt/rng.hpp"

namespace hgkt {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x8f1bbcdcbfa53e0bULL;
  std::uint64_t out = 0;
  for (std::uint64_t p : parts) {
    state ^= p + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
    out = splitmix64(state);
  }
  return out;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

std::vector<int> sample_without_replacement(const std::vector<int>& pool,
                                            int count, std::uint64_t seed) {
  if (count >= static_cast<int>(pool.size())) return pool;
  std::vector<int> work = pool;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t remaining = work.size() - static_cast<std::size_t>(i);
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, remaining));
    std::swap(work[i], work[j]);
  }
  work.resize(count);
  return work;
}

}  // namespace hgkt
