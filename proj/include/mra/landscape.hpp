#pragma once

// Numerical checks of the loss landscape on the phase manifold: Monte Carlo
// expected alignment, critical points, discriminant geometry, Morse census on
// 2-tori, and the behaviour of alignment on pure noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "mra/alignment.hpp"
#include "mra/data.hpp"
#include "mra/error.hpp"
#include "mra/signal.hpp"

namespace mra {

// ---------------------------------------------------------------------------
// Expected alignment

/// (1/M) sum_m align_sample(z, x + tau * eps_m) with eps_m drawn from `seed`.
/// The same seed reuses the same eps_m for any z, x and tau.
inline RealSignal mc_expected_align(const RealSignal& z, const RealSignal& x, double tau, std::size_t M,
                                    std::uint64_t seed) {
  return averaged_align(z, noisy_copies(x, tau, M, seed)).average;
}

/// Precomputed noisy copies for repeated evaluations with common random numbers.
class MonteCarloBank {
public:
  MonteCarloBank(const RealSignal& x, double tau, std::size_t M, std::uint64_t seed)
      : x_(x), tau_(tau), packed_(noisy_copies(x, tau, M, seed)) {}

  const RealSignal& signal() const noexcept { return x_; }
  double tau() const noexcept { return tau_; }
  std::size_t size() const noexcept { return packed_.size(); }
  const PackedSamples& packed() const noexcept { return packed_; }

  RealSignal expected_align(const RealSignal& z) const { return averaged_align(z, packed_).average; }
  double expected_loss(const RealSignal& z) const { return empirical_loss(z, packed_); }
  std::vector<double> residuals(const RealSignal& z) const { return aligned_residuals(z, packed_); }

private:
  RealSignal x_;
  double tau_;
  PackedSamples packed_;
};

// ---------------------------------------------------------------------------
// Expected maximum of L standard normals

namespace detail {

struct GaussLegendre {
  std::vector<double> nodes, weights;

  explicit GaussLegendre(std::size_t n) : nodes(n), weights(n) {
    for (std::size_t i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
          p0 = p1;
          p1 = p2;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  double integrate(const std::function<double(double)>& f, double a, double b) const {
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(c + h * nodes[i]);
    return s * h;
  }
};

inline double adaptive(const GaussLegendre& g, const std::function<double(double)>& f, double a, double b,
                       double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = g.integrate(f, a, m), right = g.integrate(f, m, b);
  if (depth <= 0 || std::abs(left + right - whole) <= tol) return left + right;
  return adaptive(g, f, a, m, left, 0.5 * tol, depth - 1) + adaptive(g, f, m, b, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// E[max of L i.i.d. standard normals] = L * int x Phi(x)^(L-1) phi(x) dx over
/// [-10, 10], adaptive Gauss-Legendre with `quadPoints` nodes per panel.
inline double expected_max_gaussian(std::size_t L, std::size_t quadPoints = 16, double tol = 1e-10) {
  if (L < 1) throw std::invalid_argument("expected_max_gaussian: L must be >= 1");
  if (quadPoints < 2) throw std::invalid_argument("expected_max_gaussian: need at least 2 nodes");
  const detail::GaussLegendre g(quadPoints);
  const double Ld = static_cast<double>(L);
  auto f = [Ld](double x) {
    const double Phi = 0.5 * std::erfc(-x / std::numbers::sqrt2);
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return Ld * x * std::pow(Phi, Ld - 1.0) * phi;
  };
  return detail::adaptive(g, f, -10.0, 10.0, g.integrate(f, -10.0, 10.0), tol, 30);
}

// ---------------------------------------------------------------------------
// Sign critical points

enum class CriticalKind { min, saddle, max, unresolved };

inline const char* to_string(CriticalKind k) noexcept {
  switch (k) {
    case CriticalKind::min: return "min";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::max: return "max";
    default: return "unresolved";
  }
}

struct CriticalCandidate {
  /// Sign per entry of `freqs`.
  std::vector<int> signMask;
  /// Frequencies carrying the signs (band frequencies, then Nyquist if present).
  std::vector<std::size_t> freqs;
  RealSignal signal;
  double tangentGradNorm = std::numeric_limits<double>::quiet_NaN();
  CriticalKind classification = CriticalKind::unresolved;
};

/// Frequencies with nonzero amplitude in the band 1..floor((L-1)/2), plus the
/// Nyquist frequency for even L when it is nonzero.
inline std::vector<std::size_t> sign_frequencies(const AmplitudeProfile& p) {
  auto f = p.support();
  if (p.has_nyquist() && p.amp(p.length() / 2) > 0.0) f.push_back(p.length() / 2);
  return f;
}

/// All 2^d signals whose Fourier coefficients are those of x with a subset of
/// supported coefficients negated. Mask 0 (all +) is x itself.
inline std::vector<CriticalCandidate> enumerate_sign_criticals(const RealSignal& x) {
  const std::size_t L = x.size();
  const auto profile = AmplitudeProfile::of(x);
  if (profile.degenerate()) throw std::invalid_argument("enumerate_sign_criticals: constant signal");
  const auto freqs = sign_frequencies(profile);
  if (freqs.size() > 24) throw std::invalid_argument("enumerate_sign_criticals: support too large to enumerate");
  const Spectrum xh = dft(x);
  std::vector<CriticalCandidate> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << freqs.size()); ++mask) {
    CriticalCandidate c;
    c.freqs = freqs;
    Spectrum s = xh;
    for (std::size_t j = 0; j < freqs.size(); ++j) {
      const int sign = (mask >> j) & 1 ? -1 : 1;
      c.signMask.push_back(sign);
      const std::size_t k = freqs[j];
      s[k] *= static_cast<double>(sign);
      if (k != L - k) s[L - k] *= static_cast<double>(sign);
    }
    c.signal = idft(s);
    out.push_back(std::move(c));
  }
  return out;
}

/// Tangent norm of c - E[align(c, x + eps)] on the manifold of x.
inline double verify_critical(const RealSignal& c, const MonteCarloBank& bank) {
  const auto profile = AmplitudeProfile::of(bank.signal());
  return norm(tangent_project(c, c - bank.expected_align(c), profile));
}

inline double verify_critical(const CriticalCandidate& c, const RealSignal& x, double tau, std::size_t M,
                              std::uint64_t seed) {
  return verify_critical(c.signal, MonteCarloBank(x, tau, M, seed));
}

namespace detail {

/// Eigenvalues of a small symmetric matrix (cyclic Jacobi).
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i * n + i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Rotate the phase of each band frequency in `freqs` by the matching angle.
inline RealSignal rotate_phases(const RealSignal& z, std::span<const std::size_t> freqs, std::span<const double> th) {
  const std::size_t L = z.size();
  std::vector<double> ph((L - 1) / 2, 0.0);
  for (std::size_t j = 0; j < freqs.size(); ++j)
    if (freqs[j] >= 1 && freqs[j] <= ph.size()) ph[freqs[j] - 1] = th[j];
  return apply_rotation(CirculantRotation(L, std::move(ph)), z);
}

}  // namespace detail

/// Index of a critical point from the finite-difference Hessian of the Monte
/// Carlo expected loss in phase coordinates (common random numbers). Eigenvalues
/// within rel_tol of the largest magnitude count as zero (unresolved).
inline CriticalKind classify_critical(const RealSignal& c, const MonteCarloBank& bank, double h = 0.05,
                                      double rel_tol = 1e-3) {
  auto freqs = AmplitudeProfile::of(bank.signal()).support();
  const std::size_t d = freqs.size();
  if (d == 0) return CriticalKind::unresolved;
  auto f = [&](std::vector<double> th) { return bank.expected_loss(detail::rotate_phases(c, freqs, th)); };
  const double f0 = f(std::vector<double>(d, 0.0));
  std::vector<double> H(d * d);
  for (std::size_t a = 0; a < d; ++a) {
    std::vector<double> p(d, 0.0), m(d, 0.0);
    p[a] = h;
    m[a] = -h;
    H[a * d + a] = (f(p) - 2.0 * f0 + f(m)) / (h * h);
    for (std::size_t b = a + 1; b < d; ++b) {
      std::vector<double> pp(d, 0.0), pm(d, 0.0), mp(d, 0.0), mm(d, 0.0);
      pp[a] = pm[a] = h;
      mp[a] = mm[a] = -h;
      pp[b] = mp[b] = h;
      pm[b] = mm[b] = -h;
      H[a * d + b] = H[b * d + a] = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
    }
  }
  const auto ev = detail::symmetric_eigenvalues(H, d);
  double scale = 0.0;
  for (double e : ev) scale = std::max(scale, std::abs(e));
  if (scale == 0.0) return CriticalKind::unresolved;
  std::size_t pos = 0, neg = 0;
  for (double e : ev) {
    if (std::abs(e) <= rel_tol * scale) return CriticalKind::unresolved;
    (e > 0 ? pos : neg)++;
  }
  if (neg == 0) return CriticalKind::min;
  if (pos == 0) return CriticalKind::max;
  return CriticalKind::saddle;
}

// ---------------------------------------------------------------------------
// Discriminant geometry

/// z_u: Fourier coefficients of z multiplied by u[k], where u is circularly
/// symmetric. `half` holds u[0..floor(L/2)].
inline RealSignal sign_modulate(const RealSignal& z, std::span<const int> half) {
  const std::size_t L = z.size();
  if (half.size() != L / 2 + 1) throw std::invalid_argument("sign_modulate: need floor(L/2)+1 signs");
  Spectrum s = dft(z);
  for (std::size_t k = 0; k <= L / 2; ++k) {
    if (half[k] != 1 && half[k] != -1) throw std::invalid_argument("sign_modulate: signs must be +-1");
    s[k] *= static_cast<double>(half[k]);
    if (k != 0 && k != L - k) s[L - k] *= static_cast<double>(half[k]);
  }
  return idft(s);
}

/// max_i | ||z_u - sigma_i(z)|| - ||z_u - sigma_{-i}(z)|| |.
inline double equidistance_check(const RealSignal& z, std::span<const int> half) {
  const RealSignal zu = sign_modulate(z, half);
  const std::size_t L = z.size();
  double dev = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    const double a = distance(zu, circular_shift(z, static_cast<long long>(i)));
    const double b = distance(zu, circular_shift(z, -static_cast<long long>(i)));
    dev = std::max(dev, std::abs(a - b));
  }
  return dev;
}

struct AntipodalReport {
  /// Shift index of sigma_i(z) closest to -z (smallest on ties).
  std::size_t nearest = 0;
  /// | ||-z - sigma_i z|| - ||-z - sigma_{-i} z|| | at i = nearest.
  double tieGap = 0.0;
  /// Nearest index is nonzero and ties with its distinct mirror.
  bool onDiscriminant = false;
};

/// Where -z sits relative to the shifts of z: for odd L the nearest shift is
/// nonzero and ties with its mirror, so -z lies on the discriminant of z.
inline AntipodalReport antipodal_check(const RealSignal& z, double tol = 1e-10) {
  const std::size_t L = z.size();
  const RealSignal mz = -z;
  std::vector<double> d(L);
  for (std::size_t i = 0; i < L; ++i) d[i] = distance(mz, circular_shift(z, static_cast<long long>(i)));
  AntipodalReport r;
  r.nearest = static_cast<std::size_t>(std::min_element(d.begin(), d.end()) - d.begin());
  const std::size_t mirror = (L - r.nearest) % L;
  r.tieGap = std::abs(d[r.nearest] - d[mirror]);
  const double scale = std::max(1.0, norm(z));
  r.onDiscriminant = r.nearest != 0 && mirror != r.nearest && r.tieGap <= tol * scale;
  return r;
}

/// |cos| of the angle between every pair of discriminant normals
/// n_ij = sigma_i(z) - sigma_j(z), i < j, from the shift Gram matrix alone.
/// Pairs are ordered lexicographically.
inline std::vector<std::vector<double>> dihedral_angles(const RealSignal& z) {
  const std::size_t L = z.size();
  std::vector<double> ac(L, 0.0);  // <sigma_k z, sigma_l z> = ac[(l - k) mod L]
  for (std::size_t lag = 0; lag < L; ++lag)
    for (std::size_t n = 0; n < L; ++n) ac[lag] += z[n] * z[(n + lag) % L];
  auto G = [&](std::size_t k, std::size_t l) { return ac[(l + L - k) % L]; };
  std::vector<std::array<std::size_t, 2>> pairs;
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = i + 1; j < L; ++j) pairs.push_back({i, j});
  auto ip = [&](const std::array<std::size_t, 2>& a, const std::array<std::size_t, 2>& b) {
    return G(a[0], b[0]) - G(a[0], b[1]) - G(a[1], b[0]) + G(a[1], b[1]);
  };
  std::vector<double> nn(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    nn[p] = ip(pairs[p], pairs[p]);
    if (!(nn[p] > 1e-12 * ac[0])) throw MraError("degenerate discriminant");
  }
  std::vector<std::vector<double>> out(pairs.size(), std::vector<double>(pairs.size()));
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (std::size_t q = 0; q < pairs.size(); ++q)
      out[p][q] = std::abs(ip(pairs[p], pairs[q])) / std::sqrt(nn[p] * nn[q]);
  return out;
}

// ---------------------------------------------------------------------------
// Loss on a 2-torus

struct TorusGrid {
  std::array<std::size_t, 2> freqs{};
  std::size_t resolution = 0;
  /// Row-major, row index over phi1.
  std::vector<double> loss, gradNorm;

  double phase(std::size_t i) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(resolution);
  }
  double at(std::size_t i, std::size_t j) const noexcept { return loss[i * resolution + j]; }
};

/// Manifold point with phases (phi1, phi2) at the two supported frequencies.
inline RealSignal torus_point(const AmplitudeProfile& p, std::array<std::size_t, 2> f, double phi1, double phi2) {
  const std::size_t L = p.length();
  Spectrum s = Spectrum::zeros(L);
  s[0] = p.mean_coeff();
  s[f[0]] = std::polar(p.amp(f[0]), phi1);
  s[f[1]] = std::polar(p.amp(f[1]), phi2);
  s[L - f[0]] = std::conj(s[f[0]]);
  s[L - f[1]] = std::conj(s[f[1]]);
  return idft(s);
}

inline std::array<std::size_t, 2> torus_frequencies(const AmplitudeProfile& p) {
  const auto sup = p.support();
  const bool nyq = p.has_nyquist() && p.amp(p.length() / 2) > 0.0;
  if (sup.size() != 2 || nyq) throw MraError("grid requires 2-torus");
  return {sup[0], sup[1]};
}

/// Empirical loss and tangent-gradient norm of one frozen data set on a
/// resolution x resolution grid of phases over [0, 2 pi)^2.
inline TorusGrid torus_loss_grid(const RealSignal& x, const SampleSet& X, std::size_t resolution) {
  if (resolution < 3) throw std::invalid_argument("torus_loss_grid: resolution must be >= 3");
  const auto profile = AmplitudeProfile::of(x);
  TorusGrid g;
  g.freqs = torus_frequencies(profile);
  g.resolution = resolution;
  g.loss.resize(resolution * resolution);
  g.gradNorm.resize(resolution * resolution);
  const PackedSamples P(X);
  for (std::size_t i = 0; i < resolution; ++i)
    for (std::size_t j = 0; j < resolution; ++j) {
      const RealSignal z = torus_point(profile, g.freqs, g.phase(i), g.phase(j));
      const auto a = averaged_align(z, P);
      g.loss[i * resolution + j] = a.loss();
      g.gradNorm[i * resolution + j] = norm(tangent_project(z, z - a.average, profile));
    }
  return g;
}

inline TorusGrid torus_loss_grid(const RealSignal& x, double tau, std::size_t N, std::size_t resolution,
                                 std::uint64_t seed) {
  torus_frequencies(AmplitudeProfile::of(x));
  return torus_loss_grid(x, generate_samples(x, tau, N, seed).samples, resolution);
}

struct MorseCensus {
  std::size_t minima = 0, saddles = 0, maxima = 0;
  /// Cells whose classification needed the index tie-break (flat neighbours).
  std::size_t tieBroken = 0;

  long long euler() const noexcept {
    return static_cast<long long>(minima) - static_cast<long long>(saddles) + static_cast<long long>(maxima);
  }
};

/// Periodic box average with a window of `w` cells (w odd; w <= 1 is a copy).
inline std::vector<double> box_smooth(std::span<const double> v, std::size_t R, std::size_t w) {
  if (w <= 1) return {v.begin(), v.end()};
  if (w % 2 == 0) throw std::invalid_argument("box_smooth: window must be odd");
  const long long h = static_cast<long long>(w / 2);
  std::vector<double> out(R * R, 0.0);
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < R; ++j) {
      double s = 0.0;
      for (long long a = -h; a <= h; ++a)
        for (long long b = -h; b <= h; ++b)
          s += v[wrap_index(static_cast<long long>(i) + a, R) * R + wrap_index(static_cast<long long>(j) + b, R)];
      out[i * R + j] = s / static_cast<double>(w * w);
    }
  return out;
}

/// Critical cells of a periodic grid function. Each cell is compared with the
/// six neighbours of a triangulation of the torus grid (the square cells cut
/// along one diagonal): minimum if all are higher, maximum if all are lower,
/// saddle of multiplicity c/2 - 1 if the sign around the link changes c >= 4
/// times. Neighbours equal within tie_tol of the value range are ordered by cell
/// index, which keeps the alternating sum at the Euler characteristic 0.
inline MorseCensus morse_census(std::span<const double> v, std::size_t R, double tie_tol = 1e-12) {
  static constexpr int off[6][2] = {{-1, 0}, {-1, 1}, {0, 1}, {1, 0}, {1, -1}, {0, -1}};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double eps = tie_tol * (*hi - *lo);
  MorseCensus c;
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < R; ++j) {
      const std::size_t me = i * R + j;
      bool up[6], tied = false;
      for (int t = 0; t < 6; ++t) {
        const std::size_t o = wrap_index(static_cast<long long>(i) + off[t][0], R) * R +
                              wrap_index(static_cast<long long>(j) + off[t][1], R);
        const double d = v[o] - v[me];
        if (std::abs(d) <= eps) {
          tied = true;
          up[t] = o > me;
        } else {
          up[t] = d > 0;
        }
      }
      int changes = 0, ups = 0;
      for (int t = 0; t < 6; ++t) {
        changes += up[t] != up[(t + 1) % 6];
        ups += up[t];
      }
      bool critical = true;
      if (ups == 6) ++c.minima;
      else if (ups == 0) ++c.maxima;
      else if (changes >= 4) c.saddles += static_cast<std::size_t>(changes / 2 - 1);
      else critical = false;
      if (tied && critical) ++c.tieBroken;
    }
  return c;
}

inline MorseCensus morse_census(const TorusGrid& g, std::size_t smoothing = 0) {
  const auto v = box_smooth(g.loss, g.resolution, smoothing);
  return morse_census(v, g.resolution);
}

// ---------------------------------------------------------------------------
// Alignment of pure noise

/// Largest |angle(a[k] / ref[k])| over freqs; with mod_pi the angle is taken
/// modulo pi (sign flips ignored).
inline double max_phase_deviation(const RealSignal& a, const RealSignal& ref, std::span<const std::size_t> freqs,
                                  bool mod_pi = false) {
  const Spectrum ah = dft(a), rh = dft(ref);
  double m = 0.0;
  for (std::size_t k : freqs) {
    double d = std::abs(std::arg(ah[k] * std::conj(rh[k])));
    if (mod_pi) d = std::min(d, std::numbers::pi - d);
    m = std::max(m, d);
  }
  return m;
}

struct NoisePhaseReport {
  double maxPhaseError = 0.0;
  double mean = 0.0;
  /// 4 tau / sqrt(L N).
  double meanBound = 0.0;
  RealSignal average;
};

/// Align N pure-noise samples to z and compare the phases of the average to z.
inline NoisePhaseReport noise_phase_alignment(const RealSignal& z, double tau, std::size_t N, std::uint64_t seed) {
  const std::size_t L = z.size();
  const auto a = averaged_align(z, noisy_copies(RealSignal::zeros(L), tau, N, seed));
  NoisePhaseReport r;
  r.average = a.average;
  r.maxPhaseError = max_phase_deviation(a.average, z, AmplitudeProfile::of(z).support());
  r.mean = m1(a.average);
  r.meanBound = 4.0 * tau / std::sqrt(static_cast<double>(L * N));
  return r;
}

// ---------------------------------------------------------------------------
// Sinusoid local minimum

struct SinusoidReport {
  bool localMin = false;
  /// Smallest (loss(C x) - loss(x)) / standard error over the tested rotations.
  double minMarginSE = 0.0;
  bool antipodalMax = false;
  /// Smallest (loss(-x) - loss(y)) / standard error over y in {x, quarter rotations}.
  double antipodalMarginSE = 0.0;
};

namespace detail {
/// Mean and standard error of the paired per-sample differences a - b (halved losses).
inline std::pair<double, double> paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t M = a.size();
  double s = 0.0, ss = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const double d = 0.5 * (a[m] - b[m]);
    s += d;
    ss += d * d;
  }
  const double mean = s / static_cast<double>(M);
  const double var = std::max(0.0, ss / static_cast<double>(M) - mean * mean);
  return {mean, std::sqrt(var / static_cast<double>(M))};
}
}  // namespace detail

/// For x = c cos(2 pi k n / L), compare the Monte Carlo expected loss at x with
/// rotations by +-0.05 j (j = 1..nDirections) on its circle manifold; the check
/// passes when every rotation is higher by more than 3 standard errors of the
/// paired difference. Also reports whether -x is strictly highest among x and
/// the quarter rotations.
inline SinusoidReport sinusoid_local_min_check(std::size_t L, long long k, double c, double tau, std::size_t M,
                                               std::size_t nDirections, std::uint64_t seed) {
  if (L < 3) throw std::invalid_argument("sinusoid_local_min_check: L must be >= 3");
  const std::size_t kk0 = wrap_index(k, L);
  if (kk0 == 0) throw std::invalid_argument("sinusoid_local_min_check: k must be nonzero mod L");
  const std::size_t kk = std::min(kk0, L - kk0);
  if (2 * kk == L) throw std::invalid_argument("sinusoid_local_min_check: Nyquist sinusoid has no circle manifold");
  const RealSignal x = sinusoid(L, static_cast<long long>(kk), c);
  const MonteCarloBank bank(x, tau, M, seed);
  const std::size_t f[1] = {kk};
  auto rot = [&](double th) {
    const double t[1] = {th};
    return detail::rotate_phases(x, f, t);
  };
  const auto base = bank.residuals(x);
  SinusoidReport r;
  r.minMarginSE = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= nDirections; ++j)
    for (double sgn : {1.0, -1.0}) {
      const auto [mean, se] = detail::paired_difference(bank.residuals(rot(sgn * 0.05 * static_cast<double>(j))), base);
      r.minMarginSE = std::min(r.minMarginSE, se > 0.0 ? mean / se : (mean > 0.0 ? 1e300 : -1e300));
    }
  r.localMin = r.minMarginSE > 3.0;

  const auto anti = bank.residuals(-x);
  r.antipodalMarginSE = std::numeric_limits<double>::infinity();
  for (const auto& y : {x, rot(0.5 * std::numbers::pi), rot(-0.5 * std::numbers::pi)}) {
    const auto [mean, se] = detail::paired_difference(anti, bank.residuals(y));
    r.antipodalMarginSE = std::min(r.antipodalMarginSE, se > 0.0 ? mean / se : (mean > 0.0 ? 1e300 : -1e300));
  }
  r.antipodalMax = r.antipodalMarginSE > 3.0;
  return r;
}

}  // namespace mra
