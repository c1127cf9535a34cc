#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace boga {

/// SplitMix64 finaliser; a bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z)
{
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t tag) { return mix64(seed ^ mix64(tag)); }

/// Stateless generator: sample `counter` of stream `key` is a pure function of
/// (key, counter), so any evaluation order reproduces the same values.
class CounterRng {
public:
  explicit constexpr CounterRng(std::uint64_t key)
    : key_(mix64(key))
  {
  }

  constexpr std::uint64_t bits(std::uint64_t counter, std::uint64_t lane = 0) const
  {
    return mix64(key_ ^ mix64(2 * counter + lane));
  }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t counter, std::uint64_t lane = 0) const
  {
    return (static_cast<double>(bits(counter, lane) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Two independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair(std::uint64_t counter) const
  {
    double const r = std::sqrt(-2.0 * std::log(uniform(counter, 0)));
    double const t = 2.0 * std::numbers::pi * uniform(counter, 1);
    return {r * std::cos(t), r * std::sin(t)};
  }

private:
  std::uint64_t key_;
};

} // namespace boga
