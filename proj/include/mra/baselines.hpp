#pragma once

// Comparison methods: expectation-maximization over the shift posterior,
// bispectrum inversion by phase synchronization, one-pass template alignment
// and the known-shift oracle.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "mra/alignment.hpp"
#include "mra/error.hpp"
#include "mra/mca.hpp"
#include "mra/random.hpp"
#include "mra/signal.hpp"

namespace mra {

// ---------------------------------------------------------------------------
// Expectation-maximization

struct EMConfig {
  double tol = 1e-6;
  std::size_t maxIter = 5000;
  std::size_t warmStartIters = 3000;
  std::size_t warmStartBatch = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(tol > 0.0)) throw ConfigError("em: tol must be > 0");
    if (maxIter < 1) throw ConfigError("em: maxIter must be >= 1");
    if (warmStartIters > 0 && warmStartBatch < 1) throw ConfigError("em: warmStartBatch must be >= 1");
  }
};

struct EMStep {
  RealSignal next;
  /// Marginal log-likelihood of the input template.
  double logLikelihood = 0.0;
};

/// One EM update. Posterior weights w_ir are proportional to
/// exp(<sigma_r z, xi_i> / tau^2); the update is the weighted average of the
/// back-shifted samples xi_i[n + r]. tau = 0 falls back to hard assignment.
inline EMStep em_step_full(const RealSignal& z, const PackedSamples& P) {
  const std::size_t L = P.length(), N = P.size();
  if (z.size() != L) throw std::invalid_argument("em_step: length mismatch");
  const double t2 = P.tau() * P.tau();
  if (t2 == 0.0) {
    auto a = averaged_align(z, P);
    return {std::move(a.average), -std::numeric_limits<double>::infinity()};
  }
  const double inv = 1.0 / t2;
  const double zz = dot(z, z);
  const std::size_t nb = P.blocks();
  std::vector<double> partial(nb * L, 0.0), ll(nb, 0.0);

  parallel::for_blocks(nb, [&](std::size_t b) {
    const auto r = P.range(b);
    const std::size_t B = r.end - r.begin;
    auto& w = detail::corr_scratch();
    detail::correlate_block(z.values(), P, b, w);
    // corr becomes normalized weights in place.
    std::vector<double> mx(B, -std::numeric_limits<double>::infinity()), sum(B, 0.0);
    for (std::size_t k = 0; k < L; ++k)
      for (std::size_t i = 0; i < B; ++i) mx[i] = std::max(mx[i], w[k * B + i]);
    for (std::size_t k = 0; k < L; ++k)
      for (std::size_t i = 0; i < B; ++i) {
        double& v = w[k * B + i];
        v = std::exp((v - mx[i]) * inv);
        sum[i] += v;
      }
    double lsum = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
      const double xn = P.sample_norm(r.begin + i);
      lsum += mx[i] * inv + std::log(sum[i]) - 0.5 * (zz + xn * xn) * inv;
      sum[i] = 1.0 / sum[i];
    }
    for (std::size_t k = 0; k < L; ++k)
      for (std::size_t i = 0; i < B; ++i) w[k * B + i] *= sum[i];
    double* acc = partial.data() + b * L;
    for (std::size_t n = 0; n < L; ++n) {
      double a = 0.0;
      for (std::size_t k = 0; k < L; ++k) {
        const std::size_t idx = n + k < L ? n + k : n + k - L;
        const double* __restrict wk = w.data() + k * B;
        const double* __restrict x = P.row(b, idx);
        for (std::size_t i = 0; i < B; ++i) a += wk[i] * x[i];
      }
      acc[n] = a;
    }
    ll[b] = lsum;
  });

  std::vector<double> out(L, 0.0);
  double total = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t n = 0; n < L; ++n) out[n] += partial[b * L + n];
    total += ll[b];
  }
  for (double& v : out) v /= static_cast<double>(N);
  const double c = static_cast<double>(N) *
                   (std::log(static_cast<double>(L)) + 0.5 * static_cast<double>(L) * std::log(2.0 * std::numbers::pi * t2));
  return {RealSignal(std::move(out)), total - c};
}

inline EMStep em_step_full(const RealSignal& z, const SampleSet& X) { return em_step_full(z, PackedSamples(X)); }

inline RealSignal em_step(const RealSignal& z, const SampleSet& X) { return em_step_full(z, X).next; }

/// Marginal log-likelihood of template z under the shift-mixture model.
inline double em_log_likelihood(const RealSignal& z, const SampleSet& X) { return em_step_full(z, X).logLikelihood; }

/// Warm start on a random batch drawn without replacement, then full-data EM
/// until the template moves by at most tol. logLikelihood holds the trace of the
/// full-data phase (likelihood of each iterate before its update).
struct EMResult : ReconstructionResult {
  std::vector<double> logLikelihood;
};

inline std::vector<std::size_t> sample_without_replacement(std::size_t N, std::size_t n, std::uint64_t key) {
  // Partial Fisher-Yates driven by the counter stream.
  std::vector<std::size_t> idx(N);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const CounterRng rng(key);
  n = std::min(n, N);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.below(i, 0, N - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

inline EMResult em_reconstruct(const SampleSet& X, const EMConfig& cfg = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t N = X.size();
  EMResult res;
  const std::size_t bn = std::min(cfg.warmStartBatch, N);
  const auto batch_idx = sample_without_replacement(N, std::max<std::size_t>(bn, 1), derive_key(cfg.seed, 0xE3u));
  RealSignal z = X.signal(batch_idx.front());
  if (cfg.warmStartIters > 0) {
    const PackedSamples batch(bn == N ? X : X.subset(batch_idx));
    for (std::size_t it = 0; it < cfg.warmStartIters; ++it) z = em_step_full(z, batch).next;
  }
  const PackedSamples P(X);
  for (std::size_t m = 1; m <= cfg.maxIter; ++m) {
    EMStep st = em_step_full(z, P);
    res.logLikelihood.push_back(st.logLikelihood);
    const double step = distance(st.next, z);
    z = std::move(st.next);
    res.iterations = m;
    if (step <= cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.signal = std::move(z);
  res.wallTimeSeconds = detail::seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------------------
// Bispectrum

class Bispectrum {
public:
  explicit Bispectrum(std::size_t L) : L_(L), v_(L * L) {}
  std::size_t length() const noexcept { return L_; }
  cdouble operator()(std::size_t k1, std::size_t k2) const noexcept { return v_[k1 * L_ + k2]; }
  cdouble& operator()(std::size_t k1, std::size_t k2) noexcept { return v_[k1 * L_ + k2]; }
  std::span<const cdouble> values() const noexcept { return v_; }

  /// Exact bispectrum of one signal.
  static Bispectrum of(const RealSignal& x) {
    const std::size_t L = x.size();
    const Spectrum s = dft(x);
    Bispectrum B(L);
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = 0; b < L; ++b) B(a, b) = s[a] * std::conj(s[b]) * s[(b + L - a) % L];
    return B;
  }

private:
  std::size_t L_;
  std::vector<cdouble> v_;
};

inline constexpr std::size_t kBispectrumBlock = 512;

/// B[k1,k2] = (1/N) sum_j Xi_j[k1] conj(Xi_j[k2]) Xi_j[k2 - k1]. Only k2 >= k1
/// is accumulated; the rest follows from B[k2,k1] = conj(B[k1,k2]).
inline Bispectrum estimate_bispectrum(const SampleSet& X) {
  const std::size_t L = X.length(), N = X.size();
  const std::size_t nb = parallel::block_count(N, kBispectrumBlock);
  const std::size_t P = L * (L + 1) / 2;
  std::vector<double> pre(nb * P, 0.0), pim(nb * P, 0.0);

  parallel::for_blocks(nb, [&](std::size_t b) {
    const auto r = parallel::block_range(b, N, kBispectrumBlock);
    const std::size_t B = r.end - r.begin;
    std::vector<double> re(L * B), im(L * B);
    std::vector<cdouble> in(L), out(L);
    for (std::size_t i = 0; i < B; ++i) {
      auto s = X.sample(r.begin + i);
      std::copy(s.begin(), s.end(), in.begin());
      fft::transform(in.data(), out.data(), L, fft::Direction::plus);
      for (std::size_t k = 0; k < L; ++k) {
        re[k * B + i] = out[k].real();
        im[k * B + i] = out[k].imag();
      }
    }
    std::size_t p = 0;
    for (std::size_t k1 = 0; k1 < L; ++k1)
      for (std::size_t k2 = k1; k2 < L; ++k2, ++p) {
        const std::size_t d = k2 - k1;
        const double* __restrict ar = re.data() + k1 * B;
        const double* __restrict ai = im.data() + k1 * B;
        const double* __restrict br = re.data() + k2 * B;
        const double* __restrict bi = im.data() + k2 * B;
        const double* __restrict cr = re.data() + d * B;
        const double* __restrict ci = im.data() + d * B;
        double sr = 0.0, si = 0.0;
        for (std::size_t i = 0; i < B; ++i) {
          const double pr = ar[i] * br[i] + ai[i] * bi[i];
          const double pi = ai[i] * br[i] - ar[i] * bi[i];
          sr += pr * cr[i] - pi * ci[i];
          si += pr * ci[i] + pi * cr[i];
        }
        pre[b * P + p] = sr;
        pim[b * P + p] = si;
      }
  });

  Bispectrum out(L);
  std::size_t p = 0;
  const double inv = 1.0 / static_cast<double>(N);
  for (std::size_t k1 = 0; k1 < L; ++k1)
    for (std::size_t k2 = k1; k2 < L; ++k2, ++p) {
      double sr = 0.0, si = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        sr += pre[b * P + p];
        si += pim[b * P + p];
      }
      out(k1, k2) = cdouble(sr * inv, si * inv);
      out(k2, k1) = std::conj(out(k1, k2));
    }
  return out;
}

struct PhaseSync {
  std::vector<cdouble> phases;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline std::size_t band(std::size_t L) noexcept { return (L - 1) / 2; }

/// Index of signed frequency k in [-K, K].
inline std::size_t sidx(long long k, std::size_t L) noexcept { return wrap_index(k, L); }

inline std::vector<cdouble> unit_entries(const Bispectrum& B) {
  const auto v = B.values();
  std::vector<cdouble> H(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    H[i] = a > 0.0 ? v[i] / a : cdouble(0.0, 0.0);
  }
  return H;
}

inline void check_support(const Bispectrum& B) {
  const std::size_t L = B.length(), K = band(L);
  double mx = 0.0;
  for (auto c : B.values()) mx = std::max(mx, std::abs(c));
  const double floor = 1e-10 * mx;
  for (std::size_t k1 = 1; k1 <= K; ++k1) {
    double row = 0.0;
    for (long long k2 = -static_cast<long long>(K); k2 <= static_cast<long long>(K); ++k2)
      row = std::max(row, std::abs(B(k1, sidx(k2, L))));
    if (!(row > floor)) throw MraError("insufficient signal");
  }
}

}  // namespace detail

/// Recover unit-modulus Fourier phases from a bispectrum by the multiplicative
/// fixed-point iteration u[k1] <- phase(sum_k2 H[k1,k2] conj(u[k2-k1]) u[k2])
/// over the band |k| <= floor((L-1)/2), with the gauge u[1] = 1 and u[0] set to
/// the sign of the DC entry. An even-L Nyquist phase is left at 1.
inline PhaseSync synchronize_phases(const Bispectrum& B, double tol = 1e-10, std::size_t maxIter = 5000,
                                    std::uint64_t seed = 0) {
  const std::size_t L = B.length();
  const long long K = static_cast<long long>(detail::band(L));
  detail::check_support(B);
  const auto H = detail::unit_entries(B);
  auto h = [&](std::size_t a, std::size_t b) { return H[a * L + b]; };

  const CounterRng rng(derive_key(seed, 0x5Cu));
  std::vector<cdouble> u(L, cdouble(1.0, 0.0));
  u[0] = B(0, 0).real() < 0.0 ? -1.0 : 1.0;
  for (long long k = 1; k <= K; ++k) {
    u[k] = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform(0, static_cast<std::uint64_t>(k)));
    u[L - k] = std::conj(u[k]);
  }

  PhaseSync out;
  std::vector<cdouble> next(u);
  for (std::size_t it = 1; it <= maxIter; ++it) {
    for (long long k1 = 1; k1 <= K; ++k1) {
      cdouble s = 0.0;
      for (long long k2 = -K; k2 <= K; ++k2) {
        const long long d = k2 - k1;
        if (d < -K || d > K) continue;
        s += h(static_cast<std::size_t>(k1), detail::sidx(k2, L)) * std::conj(u[detail::sidx(d, L)]) *
             u[detail::sidx(k2, L)];
      }
      const double a = std::abs(s);
      next[k1] = a > 0.0 ? s / a : u[k1];
    }
    // Gauge: remove the linear ramp that would make u[1] != 1.
    const cdouble g = K >= 1 ? std::conj(next[1]) : cdouble(1.0, 0.0);
    cdouble gk = 1.0;
    for (long long k = 1; k <= K; ++k) {
      gk *= g;
      next[k] *= gk;
      next[k] /= std::abs(next[k]);
      next[L - k] = std::conj(next[k]);
    }
    double delta = 0.0;
    for (long long k = 1; k <= K; ++k) delta = std::max(delta, std::abs(next[k] - u[k]));
    u = next;
    out.iterations = it;
    if (delta < tol) {
      out.converged = true;
      break;
    }
  }
  out.phases = std::move(u);
  return out;
}

inline RealSignal oracle_average(const SampleSet& X, std::span<const std::size_t> trueShifts) {
  const std::size_t L = X.length(), N = X.size();
  if (trueShifts.size() != N) throw std::invalid_argument("oracle_average: need one shift per sample");
  std::vector<double> acc(L, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    auto s = X.sample(i);
    const std::size_t r = trueShifts[i] % L;
    for (std::size_t n = 0; n < L; ++n) acc[n] += s[(n + r) % L];
  }
  for (double& v : acc) v /= static_cast<double>(N);
  return RealSignal(std::move(acc));
}

/// One averaged alignment pass against a fixed template.
inline RealSignal template_reconstruct(const SampleSet& X, const RealSignal& templ) {
  return averaged_align(templ, X).average;
}

struct BispectrumConfig {
  double tol = 1e-10;
  std::size_t maxIter = 5000;
  std::uint64_t seed = 0;
  std::size_t restarts = 3;
  NoiseBias noiseBias = NoiseBias::scaled;
};

/// Power-spectrum amplitudes, mean, and bispectrum phases combined by inverse DFT.
inline ReconstructionResult bispectrum_reconstruct(const SampleSet& X, const BispectrumConfig& cfg = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t L = X.length();
  const long long K = static_cast<long long>(detail::band(L));
  const AmplitudeProfile prof = estimate_power_spectrum(X, cfg.noiseBias);
  Bispectrum B = estimate_bispectrum(X);
  // Entries touching DC reduce to meanCoeff * power; use the debiased power there.
  const double dc = prof.mean_coeff();
  for (std::size_t k = 0; k < L; ++k) {
    const double p = prof.amp(k) * prof.amp(k);
    B(0, k) = dc * p;
    B(k, 0) = dc * p;
    B(k, k) = dc * p;
  }
  B(0, 0) = dc * dc * dc;

  ReconstructionResult res;
  PhaseSync sync;
  for (std::size_t attempt = 0; attempt <= cfg.restarts; ++attempt) {
    const std::uint64_t s = attempt == 0 ? cfg.seed : derive_key(cfg.seed, 0xB5u, attempt);
    sync = synchronize_phases(B, cfg.tol, cfg.maxIter, s);
    res.iterations += sync.iterations;
    if (sync.converged) break;
  }
  res.converged = sync.converged;
  auto& u = sync.phases;

  // The u[1] = 1 gauge leaves a fractional shift ramp exp(i c k). In-band
  // triples cannot see it; triples whose difference wraps around L can.
  const auto H = detail::unit_entries(B);
  cdouble acc = 0.0;
  for (long long k1 = -K; k1 <= K; ++k1)
    for (long long k2 = -K; k2 <= K; ++k2) {
      const long long d = k2 - k1;
      if (d >= -K && d <= K) continue;
      const long long dd = d > K ? d - static_cast<long long>(L) : d + static_cast<long long>(L);
      if (dd < -K || dd > K) continue;
      const cdouble t = H[detail::sidx(k1, L) * L + detail::sidx(k2, L)] * std::conj(u[detail::sidx(k1, L)]) *
                        u[detail::sidx(k2, L)] * std::conj(u[detail::sidx(dd, L)]);
      acc += (k1 - k2 + dd == -static_cast<long long>(L)) ? std::conj(t) : t;
    }
  const double c = std::abs(acc) > 0.0 ? std::arg(acc) / static_cast<double>(L) : 0.0;

  Spectrum h = Spectrum::zeros(L);
  h[0] = dc;
  for (long long k = 1; k <= K; ++k) {
    h[k] = prof.amp(k) * u[k] * std::polar(1.0, c * static_cast<double>(k));
    h[L - k] = std::conj(h[k]);
  }
  if (L % 2 == 0) {
    // Nyquist sign from B[k, L/2] = X[k] conj(X[L/2]) X[L/2 - k].
    const std::size_t ny = L / 2;
    cdouble s = 0.0;
    for (std::size_t k = 1; k < ny; ++k) s += std::conj(H[k * L + ny]) * h[k] * h[ny - k];
    h[ny] = (s.real() < 0.0 ? -1.0 : 1.0) * prof.amp(ny);
  }
  res.signal = idft(h);
  res.wallTimeSeconds = detail::seconds_since(t0);
  if (!res.converged) res.warning = "phase synchronization did not converge";
  return res;
}

}  // namespace mra
