#pragma once

// Synthetic observations xi_i = sigma_{r_i}(x) + eps_i and the test signals
// used in the experiments.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "mra/random.hpp"
#include "mra/signal.hpp"

namespace mra {

struct GeneratedData {
  SampleSet samples;
  std::vector<std::size_t> shifts;
};

namespace detail {
inline constexpr std::uint64_t kShiftStream = 0x5A1F7;
inline constexpr std::uint64_t kNoiseStream = 0x90153;
}  // namespace detail

/// Uniform shifts and i.i.d. N(0, tau^2) noise. Sample i depends only on
/// (seed, i), so the data for N is a prefix of the data for any larger N.
inline GeneratedData generate_samples(const RealSignal& x, double tau, std::size_t N, std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("generate_samples: N must be >= 1");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument("generate_samples: tau must be finite and >= 0");
  const std::size_t L = x.size();
  const CounterRng shifts(derive_key(seed, detail::kShiftStream));
  const CounterRng noise(derive_key(seed, detail::kNoiseStream));
  GeneratedData out;
  out.shifts.resize(N);
  std::vector<double> rows(N * L), eps(L);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t r = shifts.below(i, 0, L);
    out.shifts[i] = r;
    noise.normals(i, eps.data(), L);
    double* row = rows.data() + i * L;
    for (std::size_t n = 0; n < L; ++n) row[(n + r) % L] = x[n];
    for (std::size_t n = 0; n < L; ++n) row[n] += tau * eps[n];
  }
  out.samples = SampleSet(L, tau, std::move(rows));
  return out;
}

/// M unshifted noisy copies x + tau * eps_m; the same seed gives the same eps
/// for every x and tau.
inline SampleSet noisy_copies(const RealSignal& x, double tau, std::size_t M, std::uint64_t seed) {
  const std::size_t L = x.size();
  const CounterRng noise(derive_key(seed, detail::kNoiseStream));
  std::vector<double> rows(M * L);
  for (std::size_t m = 0; m < M; ++m) {
    double* row = rows.data() + m * L;
    noise.normals(m, row, L);
    for (std::size_t n = 0; n < L; ++n) row[n] = x[n] + tau * row[n];
  }
  return SampleSet(L, tau, std::move(rows));
}

/// Indicator of the first `width` entries, scaled by `height`.
inline RealSignal square_wave(std::size_t L, std::size_t width, double height = 1.0) {
  if (width > L) throw std::invalid_argument("square_wave: width exceeds length");
  std::vector<double> v(L, 0.0);
  for (std::size_t n = 0; n < width; ++n) v[n] = height;
  return RealSignal(std::move(v));
}

/// c * cos(2 pi k n / L).
inline RealSignal sinusoid(std::size_t L, long long k, double c = 1.0) {
  std::vector<double> v(L);
  const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(L);
  for (std::size_t n = 0; n < L; ++n) v[n] = c * std::cos(w * static_cast<double>(n));
  return RealSignal(std::move(v));
}

}  // namespace mra
