#pragma once

#include <cmath>
#include <cstdint>

namespace dhom {

// Counter-based generator: every variate is a pure function of
// (seed, path, step, axis, kind), so parallel schedules and replays cannot
// change the stream.
struct CounterRng {
  std::uint64_t seed;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t word(std::uint64_t path, std::uint64_t step, std::uint32_t axis,
                     std::uint32_t kind) const {
    const std::uint64_t tag = (static_cast<std::uint64_t>(axis) << 32) | kind;
    return mix(seed ^ mix(path ^ mix(step ^ mix(tag))));
  }

  // Open interval (0,1): 53-bit mantissa centered away from both endpoints.
  double uniform01(std::uint64_t path, std::uint64_t step, std::uint32_t axis,
                   std::uint32_t kind) const {
    const double u = static_cast<double>(word(path, step, axis, kind) >> 11);
    return (u + 0.5) * 0x1.0p-53;
  }

  // One standard normal per (path, step, axis) via Box-Muller.
  double gaussian(std::uint64_t path, std::uint64_t step, std::uint32_t axis) const {
    const double u1 = uniform01(path, step, axis, 0);
    const double u2 = uniform01(path, step, axis, 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
};

}  // namespace dhom
