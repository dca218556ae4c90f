#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace bret {

/// SplitMix64 finalizer over (seed, key). Used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);

/// FNV-1a over the bytes of `name`.
std::uint64_t hash_name(std::string_view name);

/// Seeded random source.
///
/// Raw bits come from std::mt19937_64, whose output sequence is pinned by the
/// C++ standard. Uniform and normal variates are derived here instead of via
/// <random> distributions, whose algorithms differ between standard libraries:
///   uniform():  top 53 bits of one draw times 2^-53, in [0, 1)
///   index(n):   rejection sampling on one or more draws, unbiased
///   normal():   Box-Muller cosine branch, two uniform() draws per variate
/// Named substreams are seeded with mix_seed(seed, hash_name(name)) and never
/// advance the parent.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n);
  double normal();

  SeededRng substream(std::string_view name) const;
  SeededRng substream(std::uint64_t key) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// n i.i.d. standard normal draws.
std::vector<double> standard_normal(SeededRng& rng, std::size_t n);

}  // namespace bret
