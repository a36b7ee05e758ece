#pragma once

#include <cstdint>
#include <random>

namespace ksme {

/// Purpose tag for substream derivation. Streams for distinct purposes (or
/// distinct indices within a purpose) are statistically independent, so runs
/// can be parallelized without sharing engines.
enum class StreamPurpose : std::uint64_t {
  truth = 1,       ///< ground-truth evolution and measurement noise, per run
  init = 2,        ///< initial belief mean sampling, per run
  oracle = 3,      ///< Monte Carlo moment estimation
  bench = 4,       ///< complexity benchmark inputs
  validation = 5,  ///< randomized validation configurations
  test = 6,        ///< ad-hoc use in tests
};

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter scheme for reproducible substreams: the engine seed is
/// splitmix64(splitmix64(splitmix64(master) ^ purpose) ^ index). The same
/// (master, purpose, index) triple always yields the same stream.
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           StreamPurpose purpose,
                                           std::uint64_t index) {
  const std::uint64_t a = detail::splitmix64(master);
  const std::uint64_t b =
      detail::splitmix64(a ^ static_cast<std::uint64_t>(purpose));
  return detail::splitmix64(b ^ index);
}

inline std::mt19937_64 make_stream(std::uint64_t master, StreamPurpose purpose,
                                   std::uint64_t index) {
  return std::mt19937_64(derive_seed(master, purpose, index));
}

}  // namespace ksme
