#pragma once

#include <cstdint>
#include <random>

namespace omab {

using Rng = std::mt19937_64;

/// Independent random streams used inside one replication.
///
/// Each stream is seeded with splitmix64(replication_seed ^ tag(stream)), where
/// replication_seed = splitmix64(master_seed + replication * 0x9E3779B97F4A7C15).
/// Keeping the processes on separate engines means, for example, that the
/// number of reward draws in a round never shifts the arrival sequence.
enum class Stream : std::uint64_t {
  arrivals = 1,
  departures = 2,
  departure_pick = 3,
  lifetimes = 4,
  latent = 5,
  rewards = 6,
  policy = 7,
  neighbors = 8,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t replication);

std::uint64_t stream_seed(std::uint64_t replication_seed, Stream stream);

struct StreamSet {
  explicit StreamSet(std::uint64_t replication_seed);

  Rng arrivals;
  Rng departures;
  Rng departure_pick;
  Rng lifetimes;
  Rng latent;
  Rng rewards;
  Rng policy;
  Rng neighbors;
};

/// Uniform draw on [0, 1).
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace omab
