#pragma once

// Signals, spectra, circular shifts, low-order moments, power-spectrum
// estimation and the projection onto a fixed-power-spectrum ("phase")
// manifold.
//
// DFT convention throughout: X[k] = sum_n x[n] exp(+2 pi i n k / L), and the
// inverse carries the 1/L factor.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mra/error.hpp"
#include "mra/fft.hpp"
#include "mra/random.hpp"

namespace mra {

using cdouble = std::complex<double>;

/// Real signal of length L >= 2 with finite entries.
class RealSignal {
public:
  RealSignal() = default;

  explicit RealSignal(std::vector<double> values) : v_(std::move(values)) {
    if (v_.size() < 2) throw std::invalid_argument("RealSignal: length must be at least 2");
    for (double x : v_)
      if (!std::isfinite(x)) throw std::invalid_argument("RealSignal: non-finite entry");
  }

  RealSignal(std::initializer_list<double> values) : RealSignal(std::vector<double>(values)) {}

  static RealSignal zeros(std::size_t L) { return RealSignal(std::vector<double>(L, 0.0)); }
  static RealSignal constant(std::size_t L, double c) { return RealSignal(std::vector<double>(L, c)); }
  static RealSignal from_span(std::span<const double> s) {
    return RealSignal(std::vector<double>(s.begin(), s.end()));
  }

  std::size_t size() const noexcept { return v_.size(); }
  double operator[](std::size_t i) const noexcept { return v_[i]; }
  double& operator[](std::size_t i) noexcept { return v_[i]; }
  std::span<const double> values() const noexcept { return v_; }
  std::span<double> values() noexcept { return v_; }
  const std::vector<double>& vector() const noexcept { return v_; }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }

  RealSignal& operator+=(const RealSignal& o) {
    check_same(o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  RealSignal& operator-=(const RealSignal& o) {
    check_same(o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  RealSignal& operator*=(double s) noexcept {
    for (double& x : v_) x *= s;
    return *this;
  }

  friend RealSignal operator+(RealSignal a, const RealSignal& b) { return a += b; }
  friend RealSignal operator-(RealSignal a, const RealSignal& b) { return a -= b; }
  friend RealSignal operator*(RealSignal a, double s) { return a *= s; }
  friend RealSignal operator*(double s, RealSignal a) { return a *= s; }
  friend RealSignal operator-(RealSignal a) { return a *= -1.0; }
  friend bool operator==(const RealSignal&, const RealSignal&) = default;

private:
  void check_same(const RealSignal& o) const {
    if (o.size() != size()) throw std::invalid_argument("RealSignal: length mismatch");
  }
  std::vector<double> v_;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double dot(const RealSignal& a, const RealSignal& b) noexcept { return dot(a.values(), b.values()); }
inline double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }
inline double norm(const RealSignal& a) noexcept { return norm(a.values()); }
inline double distance(const RealSignal& a, const RealSignal& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// DFT coefficients of a length-L signal.
class Spectrum {
public:
  Spectrum() = default;
  explicit Spectrum(std::vector<cdouble> c) : c_(std::move(c)) {}
  static Spectrum zeros(std::size_t L) { return Spectrum(std::vector<cdouble>(L)); }

  std::size_t size() const noexcept { return c_.size(); }
  const cdouble& operator[](std::size_t k) const noexcept { return c_[k]; }
  cdouble& operator[](std::size_t k) noexcept { return c_[k]; }
  std::span<const cdouble> coeffs() const noexcept { return c_; }
  std::span<cdouble> coeffs() noexcept { return c_; }

  /// Largest |c[k] - conj(c[L-k])|; zero for spectra of real signals.
  double hermitian_defect() const noexcept {
    double m = 0.0;
    const std::size_t L = c_.size();
    for (std::size_t k = 0; k < L; ++k) m = std::max(m, std::abs(c_[k] - std::conj(c_[(L - k) % L])));
    return m;
  }

private:
  std::vector<cdouble> c_;
};

// ---------------------------------------------------------------------------
// Transforms and elementary operations

inline Spectrum dft(std::span<const double> x) {
  std::vector<cdouble> in(x.begin(), x.end()), out(x.size());
  fft::transform(in.data(), out.data(), x.size(), fft::Direction::plus);
  return Spectrum(std::move(out));
}
inline Spectrum dft(const RealSignal& x) { return dft(x.values()); }

/// Inverse DFT; the imaginary residue of a Hermitian spectrum is discarded.
inline RealSignal idft(const Spectrum& s) {
  const std::size_t L = s.size();
  std::vector<cdouble> out(L);
  fft::transform(s.coeffs().data(), out.data(), L, fft::Direction::minus);
  std::vector<double> v(L);
  const double inv = 1.0 / static_cast<double>(L);
  for (std::size_t n = 0; n < L; ++n) v[n] = out[n].real() * inv;
  return RealSignal(std::move(v));
}

/// Complex inverse DFT (no realness assumption).
inline std::vector<cdouble> idft_complex(std::span<const cdouble> s) {
  std::vector<cdouble> out(s.size());
  fft::transform(s.data(), out.data(), s.size(), fft::Direction::minus);
  const double inv = 1.0 / static_cast<double>(s.size());
  for (auto& c : out) c *= inv;
  return out;
}

inline std::size_t wrap_index(long long i, std::size_t L) noexcept {
  const long long m = static_cast<long long>(L);
  long long r = i % m;
  return static_cast<std::size_t>(r < 0 ? r + m : r);
}

/// out[n] = x[(n - r) mod L].
inline RealSignal circular_shift(const RealSignal& x, long long r) {
  const std::size_t L = x.size();
  std::vector<double> out(L);
  const std::size_t s = wrap_index(r, L);
  for (std::size_t n = 0; n < L; ++n) out[(n + s) % L] = x[n];
  return RealSignal(std::move(out));
}

/// out[n] = x[(-n) mod L].
inline RealSignal flip(const RealSignal& x) {
  const std::size_t L = x.size();
  std::vector<double> out(L);
  for (std::size_t n = 0; n < L; ++n) out[n] = x[(L - n) % L];
  return RealSignal(std::move(out));
}

/// First moment (1/L) sum_n x[n].
inline double m1(const RealSignal& x) noexcept {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Second moment m2[n1] = (1/L) sum_{n2} x[n2] x[n2 - n1]; dft(m2)[k] = |X[k]|^2 / L.
inline RealSignal m2(const RealSignal& x) {
  const std::size_t L = x.size();
  std::vector<double> out(L, 0.0);
  for (std::size_t lag = 0; lag < L; ++lag) {
    double s = 0.0;
    for (std::size_t n = 0; n < L; ++n) s += x[n] * x[(n + L - lag) % L];
    out[lag] = s / static_cast<double>(L);
  }
  return RealSignal(std::move(out));
}

// ---------------------------------------------------------------------------
// Samples

/// N observed signals of common length L, stored row-major, with the noise level.
class SampleSet {
public:
  SampleSet() = default;

  SampleSet(std::size_t L, double tau, std::vector<double> rows) : L_(L), tau_(tau), data_(std::move(rows)) {
    if (L_ < 2) throw std::invalid_argument("SampleSet: L must be at least 2");
    if (!(tau_ >= 0.0) || !std::isfinite(tau_)) throw std::invalid_argument("SampleSet: tau must be finite and >= 0");
    if (data_.empty() || data_.size() % L_ != 0)
      throw std::invalid_argument("SampleSet: data must hold N >= 1 rows of length L");
    for (double v : data_)
      if (!std::isfinite(v)) throw std::invalid_argument("SampleSet: non-finite entry");
  }

  SampleSet(std::span<const RealSignal> signals, double tau)
      : SampleSet(signals.empty() ? 0 : signals.front().size(), tau, flatten(signals)) {}

  std::size_t length() const noexcept { return L_; }
  std::size_t size() const noexcept { return L_ ? data_.size() / L_ : 0; }
  double tau() const noexcept { return tau_; }
  std::span<const double> sample(std::size_t i) const noexcept { return {data_.data() + i * L_, L_}; }
  RealSignal signal(std::size_t i) const { return RealSignal::from_span(sample(i)); }
  const std::vector<double>& data() const noexcept { return data_; }

  /// First n samples (n <= size()).
  SampleSet prefix(std::size_t n) const {
    n = std::min(n, size());
    return SampleSet(L_, tau_, std::vector<double>(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(n * L_)));
  }

  SampleSet subset(std::span<const std::size_t> idx) const {
    std::vector<double> rows;
    rows.reserve(idx.size() * L_);
    for (std::size_t i : idx) {
      auto s = sample(i);
      rows.insert(rows.end(), s.begin(), s.end());
    }
    return SampleSet(L_, tau_, std::move(rows));
  }

  /// Copy with every sample transformed by fn(RealSignal) -> RealSignal.
  template <class Fn>
  SampleSet map(Fn&& fn) const {
    std::vector<double> rows;
    rows.reserve(data_.size());
    for (std::size_t i = 0; i < size(); ++i) {
      RealSignal y = fn(signal(i));
      rows.insert(rows.end(), y.begin(), y.end());
    }
    return SampleSet(L_, tau_, std::move(rows));
  }

private:
  static std::vector<double> flatten(std::span<const RealSignal> signals) {
    std::vector<double> rows;
    for (const auto& s : signals) {
      if (s.size() != signals.front().size()) throw std::invalid_argument("SampleSet: samples differ in length");
      rows.insert(rows.end(), s.begin(), s.end());
    }
    return rows;
  }

  std::size_t L_ = 0;
  double tau_ = 0.0;
  std::vector<double> data_;
};

/// DFT of every sample, row-major N x L.
inline std::vector<cdouble> dft_rows(const SampleSet& X) {
  const std::size_t L = X.length(), N = X.size();
  std::vector<cdouble> out(N * L), in(L);
  for (std::size_t i = 0; i < N; ++i) {
    auto s = X.sample(i);
    std::copy(s.begin(), s.end(), in.begin());
    fft::transform(in.data(), out.data() + i * L, L, fft::Direction::plus);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase manifold

/// Target Fourier amplitudes (symmetric, nonnegative) plus the pinned DC coefficient.
class AmplitudeProfile {
public:
  AmplitudeProfile() = default;

  AmplitudeProfile(std::vector<double> amps, double mean_coeff) : amps_(std::move(amps)), mean_(mean_coeff) {
    const std::size_t L = amps_.size();
    if (L < 2) throw std::invalid_argument("AmplitudeProfile: length must be at least 2");
    double scale = 0.0;
    for (double a : amps_) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("AmplitudeProfile: amplitudes must be finite and >= 0");
      scale = std::max(scale, a);
    }
    for (std::size_t k = 1; k < L; ++k)
      if (std::abs(amps_[k] - amps_[L - k]) > 1e-12 * std::max(1.0, scale))
        throw std::invalid_argument("AmplitudeProfile: amplitudes must satisfy amps[k] == amps[L-k]");
    for (std::size_t k = 1; k < L; ++k) amps_[L - k] = amps_[k] = 0.5 * (amps_[k] + amps_[L - k]);
    if (!std::isfinite(mean_)) throw std::invalid_argument("AmplitudeProfile: non-finite mean coefficient");
  }

  /// Profile of an exact signal: amps = |X[k]|, DC = X[0]. Amplitudes below
  /// rel_tol times the largest one are round-off and set to zero.
  static AmplitudeProfile of(const RealSignal& x, double rel_tol = 1e-12) {
    const Spectrum s = dft(x);
    const std::size_t L = x.size();
    std::vector<double> a(L);
    double mx = 0.0;
    for (std::size_t k = 0; k < L; ++k) mx = std::max(mx, a[k] = std::abs(s[k]));
    for (std::size_t k = 1; k < L; ++k) {
      a[k] = 0.5 * (a[k] + a[L - k]);
      if (a[k] <= rel_tol * mx) a[k] = 0.0;
    }
    for (std::size_t k = 1; k < L; ++k) a[L - k] = a[k];
    return AmplitudeProfile(std::move(a), s[0].real());
  }

  std::size_t length() const noexcept { return amps_.size(); }
  double amp(std::size_t k) const noexcept { return amps_[k]; }
  std::span<const double> amps() const noexcept { return amps_; }
  double mean_coeff() const noexcept { return mean_; }

  /// Frequencies 1 <= k <= floor((L-1)/2) with a positive target amplitude.
  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t k = 1; k <= (length() - 1) / 2; ++k)
      if (amps_[k] > 0.0) s.push_back(k);
    return s;
  }

  std::size_t torus_dimension() const { return support().size(); }

  bool has_nyquist() const noexcept { return length() % 2 == 0; }

  /// No positive amplitude at any k >= 1: the manifold collapses to one constant signal.
  bool degenerate() const noexcept {
    for (std::size_t k = 1; k < amps_.size(); ++k)
      if (amps_[k] > 0.0) return false;
    return true;
  }

private:
  std::vector<double> amps_;
  double mean_ = 0.0;
};

/// Per-sample Fourier coefficients below this (relative to the signal scale) count as zero.
inline constexpr double kZeroCoeffTol = 1e-13;

/// Euclidean projection onto the manifold {|Z[k]| = amps[k], Z[0] = meanCoeff}.
/// Zero coefficients receive phase 0; an even-L Nyquist coefficient keeps its sign.
inline RealSignal project_to_manifold(const RealSignal& z, const AmplitudeProfile& profile) {
  const std::size_t L = z.size();
  if (profile.length() != L) throw std::invalid_argument("project_to_manifold: length mismatch");
  Spectrum s = dft(z);
  const double tiny = kZeroCoeffTol * std::max(1.0, norm(z)) * std::sqrt(static_cast<double>(L));
  Spectrum out = Spectrum::zeros(L);
  out[0] = profile.mean_coeff();
  for (std::size_t k = 1; k <= (L - 1) / 2; ++k) {
    const double mag = std::abs(s[k]);
    const cdouble c = mag > tiny ? profile.amp(k) * (s[k] / mag) : cdouble(profile.amp(k), 0.0);
    out[k] = c;
    out[L - k] = std::conj(c);
  }
  if (L % 2 == 0) {
    const double re = s[L / 2].real();
    out[L / 2] = (re < -tiny ? -1.0 : 1.0) * profile.amp(L / 2);
  }
  return idft(out);
}

/// Largest | |Z[k]| - amps[k] | over k >= 1, plus |Z[0] - meanCoeff|.
inline double manifold_defect(const RealSignal& z, const AmplitudeProfile& profile) {
  const Spectrum s = dft(z);
  double m = std::abs(s[0].real() - profile.mean_coeff());
  for (std::size_t k = 1; k < z.size(); ++k) m = std::max(m, std::abs(std::abs(s[k]) - profile.amp(k)));
  return m;
}

enum class InitMode { sample, random_phase };

/// Point on the manifold: the projection of a seeded random sample (`sample`)
/// or of independent uniform phases (`random_phase`). A degenerate profile
/// yields the constant signal meanCoeff / L.
inline RealSignal random_manifold_point(const AmplitudeProfile& profile, std::uint64_t seed,
                                        InitMode mode = InitMode::random_phase, const SampleSet* X = nullptr) {
  const std::size_t L = profile.length();
  if (profile.degenerate()) return RealSignal::constant(L, profile.mean_coeff() / static_cast<double>(L));
  const CounterRng rng(derive_key(seed, 0x1417u));
  if (mode == InitMode::sample) {
    if (X == nullptr || X->size() == 0) throw std::invalid_argument("random_manifold_point: sample mode needs samples");
    const std::size_t i = rng.below(0, 0, X->size());
    return project_to_manifold(X->signal(i), profile);
  }
  Spectrum s = Spectrum::zeros(L);
  s[0] = profile.mean_coeff();
  for (std::size_t k = 1; k <= (L - 1) / 2; ++k) {
    const double th = 2.0 * std::numbers::pi * rng.uniform(1, k);
    s[k] = std::polar(profile.amp(k), th);
    s[L - k] = std::conj(s[k]);
  }
  if (L % 2 == 0) s[L / 2] = (rng.uniform(2, 0) < 0.5 ? -1.0 : 1.0) * profile.amp(L / 2);
  return idft(s);
}

// ---------------------------------------------------------------------------
// Estimators

/// (1/(N L)) sum_j sum_n xi_j[n].
inline double estimate_mean(const SampleSet& X) {
  const auto& d = X.data();
  return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

/// Noise-bias subtraction in the power-spectrum estimator.
enum class NoiseBias {
  /// Subtract L tau^2, the expected |eps^[k]|^2 under the unnormalized DFT.
  scaled,
  /// Subtract tau^2 (the alternative normalization).
  unscaled,
};

/// raw[k] = (1/N) sum_j (|Xi_j[k]|^2 - bias), before clamping and DC replacement.
inline std::vector<double> estimate_raw_power(const SampleSet& X, NoiseBias bias = NoiseBias::scaled) {
  const std::size_t L = X.length(), N = X.size();
  std::vector<double> acc(L, 0.0);
  std::vector<cdouble> in(L), out(L);
  for (std::size_t i = 0; i < N; ++i) {
    auto s = X.sample(i);
    std::copy(s.begin(), s.end(), in.begin());
    fft::transform(in.data(), out.data(), L, fft::Direction::plus);
    for (std::size_t k = 0; k < L; ++k) acc[k] += std::norm(out[k]);
  }
  const double t2 = X.tau() * X.tau();
  const double b = bias == NoiseBias::scaled ? static_cast<double>(L) * t2 : t2;
  for (double& a : acc) a = a / static_cast<double>(N) - b;
  return acc;
}

/// Amplitude profile estimated from data: amps[k] = sqrt(max(raw[k], 0)) for
/// k >= 1, DC pinned to L * estimate_mean(X).
inline AmplitudeProfile estimate_power_spectrum(const SampleSet& X, NoiseBias bias = NoiseBias::scaled) {
  const std::size_t L = X.length();
  std::vector<double> raw = estimate_raw_power(X, bias);
  const double dc = static_cast<double>(L) * estimate_mean(X);
  std::vector<double> amps(L);
  amps[0] = std::abs(dc);
  for (std::size_t k = 1; k < L; ++k) amps[k] = std::sqrt(std::max(0.5 * (raw[k] + raw[L - k]), 0.0));
  return AmplitudeProfile(std::move(amps), dc);
}

// ---------------------------------------------------------------------------
// Circulant orthogonal action

/// Element of CO(L): rotates Fourier mode k (1 <= k <= floor((L-1)/2)) by
/// theta_k and multiplies an even-L Nyquist mode by +-1.
class CirculantRotation {
public:
  CirculantRotation(std::size_t L, std::vector<double> phases, int nyquist_sign = 1)
      : L_(L), phases_(std::move(phases)), nyq_(nyquist_sign) {
    if (L_ < 2) throw std::invalid_argument("CirculantRotation: L must be at least 2");
    if (phases_.size() != (L_ - 1) / 2) throw std::invalid_argument("CirculantRotation: need floor((L-1)/2) phases");
    if (nyq_ != 1 && nyq_ != -1) throw std::invalid_argument("CirculantRotation: nyquist sign must be +-1");
  }

  static CirculantRotation identity(std::size_t L) { return {L, std::vector<double>((L - 1) / 2, 0.0), 1}; }

  /// The linear phase ramp theta_k = 2 pi k r / L; acts as circular_shift(., r).
  static CirculantRotation shift(std::size_t L, long long r) {
    std::vector<double> ph((L - 1) / 2);
    const std::size_t s = wrap_index(r, L);
    for (std::size_t k = 1; k <= ph.size(); ++k)
      ph[k - 1] = 2.0 * std::numbers::pi * static_cast<double>((k * s) % L) / static_cast<double>(L);
    return {L, std::move(ph), (L % 2 == 0 && s % 2 == 1) ? -1 : 1};
  }

  static CirculantRotation random(std::size_t L, std::uint64_t seed) {
    const CounterRng rng(derive_key(seed, 0xC0u));
    std::vector<double> ph((L - 1) / 2);
    for (std::size_t k = 0; k < ph.size(); ++k) ph[k] = 2.0 * std::numbers::pi * rng.uniform(0, k);
    return {L, std::move(ph), rng.uniform(1, 0) < 0.5 ? -1 : 1};
  }

  std::size_t length() const noexcept { return L_; }
  std::span<const double> phases() const noexcept { return phases_; }
  int nyquist_sign() const noexcept { return nyq_; }

  CirculantRotation inverse() const {
    std::vector<double> ph(phases_);
    for (double& p : ph) p = -p;
    return {L_, std::move(ph), nyq_};
  }

  Spectrum apply(Spectrum s) const {
    for (std::size_t k = 1; k <= phases_.size(); ++k) {
      s[k] *= std::polar(1.0, phases_[k - 1]);
      s[L_ - k] = std::conj(s[k]);
    }
    if (L_ % 2 == 0) s[L_ / 2] *= static_cast<double>(nyq_);
    return s;
  }

private:
  std::size_t L_;
  std::vector<double> phases_;
  int nyq_;
};

inline RealSignal apply_rotation(const CirculantRotation& C, const RealSignal& x) {
  if (C.length() != x.size()) throw std::invalid_argument("apply_rotation: length mismatch");
  return idft(C.apply(dft(x)));
}

// ---------------------------------------------------------------------------
// Error metric

/// min_r ||z - sigma_r(x)|| / ||x||.
inline double nrmse(const RealSignal& z, const RealSignal& x) {
  if (z.size() != x.size()) throw std::invalid_argument("nrmse: length mismatch");
  const double nx = norm(x);
  if (nx == 0.0) throw MraError("zero reference signal");
  const std::size_t L = x.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < L; ++r) {
    double s = 0.0;
    for (std::size_t n = 0; n < L; ++n) {
      const double d = z[n] - x[(n + L - r) % L];
      s += d * d;
    }
    best = std::min(best, s);
  }
  return std::sqrt(best) / nx;
}

}  // namespace mra
