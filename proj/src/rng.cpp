#include "omab/rng.hpp"

namespace omab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t replication) {
  return splitmix64(master_seed + replication * 0x9E3779B97F4A7C15ULL);
}

std::uint64_t stream_seed(std::uint64_t rep_seed, Stream stream) {
  return splitmix64(rep_seed ^ (static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL));
}

StreamSet::StreamSet(std::uint64_t rep_seed)
    : arrivals(stream_seed(rep_seed, Stream::arrivals)),
      departures(stream_seed(rep_seed, Stream::departures)),
      departure_pick(stream_seed(rep_seed, Stream::departure_pick)),
      lifetimes(stream_seed(rep_seed, Stream::lifetimes)),
      latent(stream_seed(rep_seed, Stream::latent)),
      rewards(stream_seed(rep_seed, Stream::rewards)),
      policy(stream_seed(rep_seed, Stream::policy)),
      neighbors(stream_seed(rep_seed, Stream::neighbors)) {}

}  // namespace omab
