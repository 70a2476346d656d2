// Counter-based random numbers (Philox4x32-10) so that path i's stream
// depends only on (seed, i), never on thread scheduling or draw order of
// other paths.  Normals come from the inverse CDF: one uniform in, one
// normal out, no rejection, no per-stream state beyond a counter.
#pragma once

#include <array>
#include <cstdint>

namespace ddtax {

// One 10-round Philox4x32 block: 4 x 32 bits of output per counter value.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& ctr,
                                        const std::array<std::uint32_t, 2>& key);

// Inverse of the standard normal CDF (Wichura's PPND16); |error| < 1e-15
// for p in (0, 1).
double inv_normal_cdf(double p);

// Standard normal CDF, for tests and diagnostics.
double normal_cdf(double x);

// Per-path deterministic stream.  Draw k of path i under seed s is a pure
// function of (s, i, k).
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path_index)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        path_{static_cast<std::uint32_t>(path_index),
              static_cast<std::uint32_t>(path_index >> 32)} {}

  // Uniform on the open interval (0, 1).
  double next_uniform();
  double next_normal() { return inv_normal_cdf(next_uniform()); }
  double next_exponential(double rate);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> path_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int have_ = 0;  // unread 32-bit words in buf_
};

}  // namespace ddtax
