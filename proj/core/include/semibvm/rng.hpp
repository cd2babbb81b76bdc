#pragma once

#include <cstdint>
#include <initializer_list>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace semibvm {

/// SplitMix64 finalizer applied to x + golden-ratio increment.
std::uint64_t splitmix64(std::uint64_t x);

/// Folds 64-bit words left to right: h <- splitmix64(h ^ w), starting from h = 0.
std::uint64_t hash64(std::initializer_list<std::uint64_t> words);

/// Seed of replication `replication` at sample size `n` under `master_seed`.
inline std::uint64_t cell_seed(std::uint64_t master_seed, std::uint64_t n,
                               std::uint64_t replication) {
  return hash64({master_seed, n, replication});
}

// Seeded stream of uniforms and standard normals. Both the engine and the
// distributions come from Boost.Random, whose output is specified and
// identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  // Seed for an independent child stream.
  std::uint64_t split() { return splitmix64(engine_()); }

 private:
  boost::random::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  boost::random::uniform_01<double> uniform_;
};

}  // namespace semibvm
