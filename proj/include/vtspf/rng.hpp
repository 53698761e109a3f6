#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace vtspf {

using Rng = std::mt19937_64;

enum class StreamPurpose : std::uint32_t {
  initial = 1,
  identifier = 2,
  propagate = 3,
  resample = 4,
  simulate = 5,
  parameters = 6,
};

/// Derives an independent generator for every (time, particle, cluster,
/// purpose) key from one master seed. Identical keys give identical streams,
/// so results never depend on which thread consumes which stream.
class RngPolicy {
 public:
  explicit RngPolicy(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Rng stream(std::int64_t time, std::size_t particle, std::size_t cluster,
             StreamPurpose purpose) const;

  /// Child policy for an independent sub-experiment (e.g. one sweep row).
  RngPolicy derive(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

 private:
  std::uint64_t seed_;
};

}  // namespace vtspf
