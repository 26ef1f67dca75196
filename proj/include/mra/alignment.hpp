#pragma once

// Template alignment.
//
// For a template z and a sample xi the cross-correlation is
//   corr[k] = sum_m z[m] xi[m + k],
// k* = argmax corr, and the aligned sample is xi[n + k*], i.e.
// circular_shift(xi, -k*). Ties (within 1e-12 of ||z|| ||xi||) go to the
// smallest k.
//
// Batched work runs a direct O(L^2) kernel over blocks of samples stored
// frequency-major, which beats per-sample FFTs at the lengths used here and
// keeps every reduction in a fixed order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mra/parallel.hpp"
#include "mra/signal.hpp"

namespace mra {

inline constexpr double kTieTol = 1e-12;
inline constexpr std::size_t kBlockSize = 256;

/// Samples cut into blocks of kBlockSize and transposed within each block, so
/// that x(b, n)[i] is entry n of sample b * kBlockSize + i.
class PackedSamples {
public:
  explicit PackedSamples(const SampleSet& X)
      : L_(X.length()), N_(X.size()), tau_(X.tau()), nb_(parallel::block_count(N_, kBlockSize)) {
    data_.resize(L_ * N_);
    norms_.resize(N_);
    for (std::size_t b = 0; b < nb_; ++b) {
      const auto r = parallel::block_range(b, N_, kBlockSize);
      const std::size_t B = r.end - r.begin;
      double* base = data_.data() + r.begin * L_;
      for (std::size_t i = 0; i < B; ++i) {
        auto xi = X.sample(r.begin + i);
        double nn = 0.0;
        for (std::size_t n = 0; n < L_; ++n) {
          base[n * B + i] = xi[n];
          nn += xi[n] * xi[n];
        }
        norms_[r.begin + i] = std::sqrt(nn);
      }
    }
  }

  std::size_t length() const noexcept { return L_; }
  std::size_t size() const noexcept { return N_; }
  double tau() const noexcept { return tau_; }
  std::size_t blocks() const noexcept { return nb_; }
  parallel::BlockRange range(std::size_t b) const noexcept { return parallel::block_range(b, N_, kBlockSize); }
  /// Row n of block b (length = block size).
  const double* row(std::size_t b, std::size_t n) const noexcept {
    const auto r = range(b);
    return data_.data() + r.begin * L_ + n * (r.end - r.begin);
  }
  double sample_norm(std::size_t i) const noexcept { return norms_[i]; }

private:
  std::size_t L_, N_;
  double tau_;
  std::size_t nb_;
  std::vector<double> data_, norms_;
};

namespace detail {

inline bool is_constant(std::span<const double> z) noexcept {
  double mx = 0.0;
  for (double v : z) mx = std::max(mx, std::abs(v));
  for (double v : z)
    if (std::abs(v - z[0]) > 1e-14 * mx) return false;
  return true;
}

/// First index within tol of the maximum.
inline std::size_t tie_argmax(const double* c, std::size_t L, std::size_t stride, double tol) noexcept {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < L; ++k) mx = std::max(mx, c[k * stride]);
  for (std::size_t k = 0; k < L; ++k)
    if (c[k * stride] >= mx - tol) return k;
  return 0;
}

inline std::vector<double>& corr_scratch() {
  thread_local std::vector<double> s;
  return s;
}

/// corr[k * B + i] = sum_m z[m] x_i[m + k] for the samples of block b.
inline void correlate_block(std::span<const double> z, const PackedSamples& P, std::size_t b,
                            std::vector<double>& corr) {
  constexpr std::size_t W = 16;
  const std::size_t L = P.length();
  const auto r = P.range(b);
  const std::size_t B = r.end - r.begin;
  corr.resize(L * B);
  const double* base = P.row(b, 0);
  // Chunk-outer so the L x W slab of samples stays in L1 across all k.
  std::size_t i0 = 0;
  for (; i0 + W <= B; i0 += W)
    for (std::size_t k = 0; k < L; ++k) {
      double acc[W] = {};
      for (std::size_t m = 0; m < L; ++m) {
        const std::size_t idx = m + k < L ? m + k : m + k - L;
        const double* __restrict x = base + idx * B + i0;
        const double zm = z[m];
        for (std::size_t j = 0; j < W; ++j) acc[j] += zm * x[j];
      }
      double* __restrict c = corr.data() + k * B + i0;
      for (std::size_t j = 0; j < W; ++j) c[j] = acc[j];
    }
  for (std::size_t k = 0; k < L; ++k)
    for (std::size_t i = i0; i < B; ++i) {
      double t = 0.0;
      for (std::size_t m = 0; m < L; ++m) t += z[m] * base[(m + k < L ? m + k : m + k - L) * B + i];
      corr[k * B + i] = t;
    }
}

}  // namespace detail

/// Cross-correlation corr[k] = sum_m z[m] xi[m+k] through the DFT.
inline std::vector<double> cross_correlation(const RealSignal& z, const RealSignal& xi) {
  if (z.size() != xi.size()) throw std::invalid_argument("cross_correlation: length mismatch");
  const std::size_t L = z.size();
  const Spectrum zh = dft(z), xh = dft(xi);
  std::vector<cdouble> prod(L);
  for (std::size_t k = 0; k < L; ++k) prod[k] = xh[k] * std::conj(zh[k]);
  const auto c = idft_complex(prod);
  std::vector<double> out(L);
  for (std::size_t k = 0; k < L; ++k) out[k] = c[k].real();
  return out;
}

/// argmax_k sum_m z[m] xi[m+k]. A constant template makes every k tie; 0 is
/// returned and *constant_template is set.
inline std::size_t best_shift(const RealSignal& z, const RealSignal& xi, bool* constant_template = nullptr) {
  const bool flat = detail::is_constant(z.values());
  if (constant_template) *constant_template = flat;
  if (flat) return 0;
  const auto c = cross_correlation(z, xi);
  return detail::tie_argmax(c.data(), c.size(), 1, kTieTol * norm(z) * norm(xi));
}

/// The shift of xi closest to z: xi[n + best_shift(z, xi)].
inline RealSignal align_sample(const RealSignal& z, const RealSignal& xi) {
  return circular_shift(xi, -static_cast<long long>(best_shift(z, xi)));
}

struct AlignmentOutcome {
  /// r*_i with average = (1/N) sum_i circular_shift(xi_i, r*_i).
  std::vector<std::size_t> shifts;
  RealSignal average;
  /// sum_i ||z - aligned_i||^2.
  double squared_residual = 0.0;
  bool constant_template = false;

  /// (1 / 2N) sum_i ||z - aligned_i||^2.
  double loss() const noexcept { return 0.5 * squared_residual / static_cast<double>(shifts.size()); }
};

namespace detail {

struct AlignScratch {
  std::vector<double> mx, cmax;
  std::vector<std::size_t> k;
  std::vector<double> bucket;
};

inline AlignScratch& align_scratch() {
  thread_local AlignScratch s;
  return s;
}

/// Shared pass: align every sample, writing per-block sums of the aligned
/// samples to `acc` (L per block) and of the residuals to `resid`.
///
/// The residual ||z - aligned||^2 is ||z||^2 + ||xi||^2 - 2 corr[k*]; aligned
/// samples are summed per shift class first and unrotated once per block.
inline void align_blocks(const RealSignal& z, const PackedSamples& P, bool flat, std::vector<double>& acc,
                         std::vector<double>& resid, std::size_t* shifts, double* residuals) {
  const std::size_t L = P.length(), nb = P.blocks();
  acc.assign(nb * L, 0.0);
  resid.assign(nb, 0.0);
  const double zz = dot(z, z);
  const double zn = std::sqrt(zz);
  parallel::for_blocks(nb, [&](std::size_t b) {
    const auto r = P.range(b);
    const std::size_t B = r.end - r.begin;
    auto& corr = corr_scratch();
    auto& s = align_scratch();
    correlate_block(z.values(), P, b, corr);
    s.mx.assign(B, -std::numeric_limits<double>::infinity());
    s.cmax.resize(B);
    s.k.assign(B, 0);
    double* __restrict mx = s.mx.data();
    for (std::size_t k = 0; k < L; ++k) {
      const double* __restrict c = corr.data() + k * B;
      for (std::size_t i = 0; i < B; ++i) mx[i] = std::max(mx[i], c[i]);
    }
    std::size_t* __restrict kk = s.k.data();
    double* __restrict cm = s.cmax.data();
    if (flat) {
      for (std::size_t i = 0; i < B; ++i) cm[i] = corr[i];
    } else {
      // Descending k so the smallest index within tolerance wins.
      for (std::size_t i = 0; i < B; ++i) mx[i] -= kTieTol * zn * P.sample_norm(r.begin + i);
      for (std::size_t k = L; k-- > 0;) {
        const double* __restrict c = corr.data() + k * B;
        for (std::size_t i = 0; i < B; ++i)
          if (c[i] >= mx[i]) {
            kk[i] = k;
            cm[i] = c[i];
          }
      }
    }
    s.bucket.assign(L * L, 0.0);
    for (std::size_t m = 0; m < L; ++m) {
      const double* __restrict x = P.row(b, m);
      for (std::size_t i = 0; i < B; ++i) s.bucket[kk[i] * L + m] += x[i];
    }
    double* a = acc.data() + b * L;
    for (std::size_t k = 0; k < L; ++k)
      for (std::size_t n = 0; n < L; ++n) a[n] += s.bucket[k * L + (n + k < L ? n + k : n + k - L)];
    double res = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
      const double xn = P.sample_norm(r.begin + i);
      const double ri = std::max(0.0, zz + xn * xn - 2.0 * cm[i]);
      if (residuals) residuals[r.begin + i] = ri;
      res += ri;
    }
    if (shifts)
      for (std::size_t i = 0; i < B; ++i) shifts[r.begin + i] = (L - kk[i]) % L;
    resid[b] = res;
  });
}

}  // namespace detail

/// Align every sample to z and average.
inline AlignmentOutcome averaged_align(const RealSignal& z, const PackedSamples& P) {
  const std::size_t L = P.length(), N = P.size();
  if (z.size() != L) throw std::invalid_argument("averaged_align: length mismatch");
  AlignmentOutcome out;
  out.constant_template = detail::is_constant(z.values());
  out.shifts.assign(N, 0);
  std::vector<double> acc, resid;
  detail::align_blocks(z, P, out.constant_template, acc, resid, out.shifts.data(), nullptr);
  std::vector<double> avg(L, 0.0);
  for (std::size_t b = 0; b < P.blocks(); ++b) {
    for (std::size_t n = 0; n < L; ++n) avg[n] += acc[b * L + n];
    out.squared_residual += resid[b];
  }
  for (double& v : avg) v /= static_cast<double>(N);
  out.average = RealSignal(std::move(avg));
  return out;
}

inline AlignmentOutcome averaged_align(const RealSignal& z, const SampleSet& X) {
  return averaged_align(z, PackedSamples(X));
}

/// ||z - aligned_i||^2 for every sample.
inline std::vector<double> aligned_residuals(const RealSignal& z, const PackedSamples& P) {
  if (z.size() != P.length()) throw std::invalid_argument("aligned_residuals: length mismatch");
  std::vector<double> out(P.size()), acc, resid;
  detail::align_blocks(z, P, detail::is_constant(z.values()), acc, resid, nullptr, out.data());
  return out;
}

/// (1 / 2N) sum_i min_k ||z - sigma_k(xi_i)||^2.
inline double empirical_loss(const RealSignal& z, const PackedSamples& P) { return averaged_align(z, P).loss(); }
inline double empirical_loss(const RealSignal& z, const SampleSet& X) { return empirical_loss(z, PackedSamples(X)); }

/// Projection of an ambient vector v onto the tangent space of the manifold
/// of `profile` at z. Per supported frequency only the i*z[k] direction
/// survives; DC, Nyquist and unsupported bins are dropped.
inline RealSignal tangent_project(const RealSignal& z, const RealSignal& v, const AmplitudeProfile& profile) {
  const std::size_t L = z.size();
  const Spectrum zh = dft(z), vh = dft(v);
  Spectrum g = Spectrum::zeros(L);
  for (std::size_t k : profile.support()) {
    const double mag = std::abs(zh[k]);
    if (mag == 0.0) continue;
    const cdouble u = zh[k] / mag;
    const cdouble t = cdouble(0.0, 1.0) * u * std::imag(std::conj(u) * vh[k]);
    g[k] = t;
    g[L - k] = std::conj(t);
  }
  return idft(g);
}

/// Riemannian gradient of the empirical loss at z: the tangent part of z - average.
inline RealSignal tangent_gradient(const RealSignal& z, const PackedSamples& P, const AmplitudeProfile& profile) {
  const auto a = averaged_align(z, P);
  return tangent_project(z, z - a.average, profile);
}

inline RealSignal tangent_gradient(const RealSignal& z, const SampleSet& X, const AmplitudeProfile& profile) {
  return tangent_gradient(z, PackedSamples(X), profile);
}

}  // namespace mra
