#pragma once

// Counter-based random numbers.
//
// Every draw is a pure function of (key, counter), so element i of a stream
// can be regenerated without touching elements 0..i-1. This is what makes
// sample i of a generated data set independent of the total sample count and
// of the thread that produced it.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mra {

__extension__ using uint128 = unsigned __int128;

/// SplitMix64 finalizer; used to derive stream keys from structured ids.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Fold a sequence of ids into one 64-bit key.
template <class... Ids>
constexpr std::uint64_t derive_key(std::uint64_t seed, Ids... ids) noexcept {
  std::uint64_t k = mix64(seed);
  ((k = mix64(k ^ static_cast<std::uint64_t>(ids))), ...);
  return k;
}

/// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
public:
  using Block = std::array<std::uint32_t, 4>;

  constexpr explicit Philox4x32(std::uint64_t key) noexcept
      : k0_(static_cast<std::uint32_t>(key)), k1_(static_cast<std::uint32_t>(key >> 32)) {}

  constexpr Block operator()(std::uint64_t c_lo, std::uint64_t c_hi) const noexcept {
    Block c{static_cast<std::uint32_t>(c_lo), static_cast<std::uint32_t>(c_lo >> 32),
            static_cast<std::uint32_t>(c_hi), static_cast<std::uint32_t>(c_hi >> 32)};
    std::uint32_t k0 = k0_, k1 = k1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      c = Block{static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<std::uint32_t>(p0)};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return c;
  }

private:
  std::uint32_t k0_, k1_;
};

/// A keyed stream of uniform and normal variates addressed by (row, column).
class CounterRng {
public:
  constexpr explicit CounterRng(std::uint64_t key) noexcept : gen_(key) {}

  /// Two uniforms in (0, 1) with 53-bit resolution.
  std::array<double, 2> uniform2(std::uint64_t row, std::uint64_t col) const noexcept {
    const auto b = gen_(row, col);
    const std::uint64_t a = (std::uint64_t{b[0]} << 32 | b[1]) >> 11;
    const std::uint64_t c = (std::uint64_t{b[2]} << 32 | b[3]) >> 11;
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    return {(static_cast<double>(a) + 0.5) * scale, (static_cast<double>(c) + 0.5) * scale};
  }

  double uniform(std::uint64_t row, std::uint64_t col) const noexcept { return uniform2(row, col)[0]; }

  /// Uniform integer in [0, n), n > 0 (multiply-shift; bias below 2^-32 for n < 2^32).
  std::uint64_t below(std::uint64_t row, std::uint64_t col, std::uint64_t n) const noexcept {
    const auto b = gen_(row, col);
    const std::uint64_t r = std::uint64_t{b[0]} << 32 | b[1];
    return static_cast<std::uint64_t>((static_cast<uint128>(r) * n) >> 64);
  }

  /// Two independent standard normals (Box-Muller).
  std::array<double, 2> normal2(std::uint64_t row, std::uint64_t col) const noexcept {
    const auto [u1, u2] = uniform2(row, col);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
  }

  /// Fill out[0..n) with standard normals for a given row.
  template <class Out>
  void normals(std::uint64_t row, Out* out, std::size_t n) const noexcept {
    std::size_t j = 0;
    for (std::uint64_t col = 0; j < n; ++col) {
      const auto g = normal2(row, col);
      out[j++] = g[0];
      if (j < n) out[j++] = g[1];
    }
  }

private:
  Philox4x32 gen_;
};

}  // namespace mra
