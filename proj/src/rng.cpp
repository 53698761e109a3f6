#include "vtspf/rng.hpp"

#include <array>

namespace vtspf {

namespace {

std::array<std::uint32_t, 2> halves(std::uint64_t x) {
  return {static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(x >> 32)};
}

}  // namespace

Rng RngPolicy::stream(std::int64_t time, std::size_t particle, std::size_t cluster,
                      StreamPurpose purpose) const {
  const auto s = halves(seed_);
  const auto t = halves(static_cast<std::uint64_t>(time));
  const auto n = halves(particle);
  const auto c = halves(cluster);
  std::seed_seq seq{s[0], s[1], t[0], t[1], n[0], n[1], c[0], c[1],
                    static_cast<std::uint32_t>(purpose)};
  return Rng(seq);
}

RngPolicy RngPolicy::derive(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  const auto s = halves(seed_);
  const auto x = halves(a);
  const auto y = halves(b);
  const auto z = halves(c);
  std::seed_seq seq{s[0], s[1], x[0], x[1], y[0], y[1], z[0], z[1], 0xD1CEu};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return RngPolicy((static_cast<std::uint64_t>(out[1]) << 32) | out[0]);
}

}  // namespace vtspf
