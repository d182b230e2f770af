#pragma once

// Counter-based random numbers (Philox 4x32-10). Every draw is a pure
// function of (key, counter, domain), so path simulations are reproducible
// under any execution order or worker count.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace exitlim {

inline constexpr std::uint32_t kDomainSplit = 0x5eedu;
inline constexpr std::uint32_t kDomainStep = 1u;
inline constexpr std::uint32_t kDomainInit = 2u;
inline constexpr std::uint32_t kDomainLimit = 3u;

inline std::array<std::uint32_t, 4> philox4x32(std::uint64_t key, std::uint32_t c0,
                                               std::uint32_t c1, std::uint32_t c2,
                                               std::uint32_t c3) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  std::uint32_t x0 = c0, x1 = c1, x2 = c2, x3 = c3;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * x0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * x2;
    const std::uint32_t y0 = static_cast<std::uint32_t>(p1 >> 32) ^ x1 ^ k0;
    const std::uint32_t y1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t y2 = static_cast<std::uint32_t>(p0 >> 32) ^ x3 ^ k1;
    const std::uint32_t y3 = static_cast<std::uint32_t>(p0);
    x0 = y0;
    x1 = y1;
    x2 = y2;
    x3 = y3;
    k0 += kW0;
    k1 += kW1;
  }
  return {x0, x1, x2, x3};
}

inline double unit_open(std::uint64_t v) {  // (0,1]
  return (static_cast<double>(v >> 11) + 1.0) * 0x1.0p-53;
}
inline double unit_halfopen(std::uint64_t v) {  // [0,1)
  return static_cast<double>(v >> 11) * 0x1.0p-53;
}

// Two independent N(0,1) draws from one counter block (Box-Muller).
inline void normal_pair(std::uint64_t key, std::uint64_t ctr, std::uint32_t block,
                        std::uint32_t domain, double& n0, double& n1) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const auto w = philox4x32(key, static_cast<std::uint32_t>(ctr),
                            static_cast<std::uint32_t>(ctr >> 32), block, domain);
  const std::uint64_t a = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
  const double r = std::sqrt(-2.0 * std::log(unit_open(a)));
  const double theta = kTwoPi * unit_halfopen(b);
  n0 = r * std::cos(theta);
  n1 = r * std::sin(theta);
}

// Fills out with i.i.d. N(0,1) draws keyed by (key, ctr, domain).
inline void fill_normals(std::uint64_t key, std::uint64_t ctr, std::uint32_t domain,
                         std::span<double> out) {
  double n0 = 0.0, n1 = 0.0;
  for (std::size_t i = 0; i < out.size(); i += 2) {
    normal_pair(key, ctr, static_cast<std::uint32_t>(i / 2), domain, n0, n1);
    out[i] = n0;
    if (i + 1 < out.size()) out[i + 1] = n1;
  }
}

// Deterministic per-index sub-seed for ensemble path splitting.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  const auto w = philox4x32(master, static_cast<std::uint32_t>(index),
                            static_cast<std::uint32_t>(index >> 32), 0, kDomainSplit);
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

}  // namespace exitlim
