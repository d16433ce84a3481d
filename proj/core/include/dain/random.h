#ifndef DAIN_RANDOM_H_
#define DAIN_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace dain {

using Rng = std::mt19937_64;

// Derives an independent seed for a named substream ("split", "init",
// "shuffle", "sample", ...) so that each stage can be reproduced on its own
// from a single user seed.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view stream);

inline Rng make_rng(std::uint64_t seed, std::string_view stream) {
  return Rng(substream_seed(seed, stream));
}

}  // namespace dain

#endif  // DAIN_RANDOM_H_
