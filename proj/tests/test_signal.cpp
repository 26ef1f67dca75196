#include <gtest/gtest.h>

#include <random>

#include "mra/data.hpp"
#include "mra/signal.hpp"
#include "oracles.hpp"

using namespace mra;

namespace {

RealSignal rand_signal(std::mt19937_64& g, std::size_t L, double s = 1.0) { return RealSignal(oracle::gaussian(g, L, s)); }

double max_abs_diff(const RealSignal& a, const RealSignal& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(RealSignal, RejectsShortAndNonFinite) {
  EXPECT_THROW(RealSignal({1.0}), std::invalid_argument);
  EXPECT_THROW(RealSignal({1.0, std::nan("")}), std::invalid_argument);
  EXPECT_THROW(RealSignal({1.0, INFINITY}), std::invalid_argument);
}

TEST(Dft, DeltaAndConstant) {
  const auto d = dft(RealSignal{1, 0, 0, 0, 0});
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(std::abs(d[k] - cdouble(1, 0)), 0.0, 1e-14);
  const auto c = dft(RealSignal::constant(6, 2.5));
  EXPECT_NEAR(c[0].real(), 15.0, 1e-13);
  for (std::size_t k = 1; k < 6; ++k) EXPECT_LT(std::abs(c[k]), 1e-13);
}

TEST(Dft, MatchesDirectSumWithPlusSign) {
  std::mt19937_64 g(1);
  for (std::size_t L : {2u, 3u, 7u, 12u, 41u}) {
    const auto x = oracle::gaussian(g, L);
    const auto ref = oracle::dft(x);
    const auto s = dft(RealSignal(x));
    for (std::size_t k = 0; k < L; ++k) EXPECT_LT(std::abs(s[k] - ref[k]), 1e-10) << L << ' ' << k;
  }
}

TEST(Dft, RoundTripAndParseval) {
  std::mt19937_64 g(2);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t L = 2 + t % 63;
    const auto x = rand_signal(g, L);
    double mx = 0;
    for (double v : x) mx = std::max(mx, std::abs(v));
    ASSERT_LE(max_abs_diff(idft(dft(x)), x), 1e-10 * mx);
    const auto s = dft(x);
    double e = 0;
    for (std::size_t k = 0; k < L; ++k) e += std::norm(s[k]);
    ASSERT_NEAR(e, static_cast<double>(L) * dot(x, x), 1e-10 * e);
    ASSERT_LT(s.hermitian_defect(), 1e-10 * std::sqrt(e));
  }
}

TEST(Shift, DefinitionAndGroupLaw) {
  const RealSignal x{1, 2, 3};
  EXPECT_EQ(circular_shift(x, 1).vector(), (std::vector<double>{3, 1, 2}));
  EXPECT_EQ(circular_shift(x, 3).vector(), x.vector());
  EXPECT_EQ(circular_shift(x, -1).vector(), (std::vector<double>{2, 3, 1}));
  std::mt19937_64 g(3);
  const auto y = rand_signal(g, 9);
  for (long long a = -4; a < 12; a += 3)
    for (long long b = -7; b < 9; b += 4)
      EXPECT_EQ(circular_shift(circular_shift(y, a), b).vector(), circular_shift(y, a + b).vector());
}

TEST(Flip, DefinitionAndSpectrum) {
  EXPECT_EQ(flip(RealSignal{1, 2, 3}).vector(), (std::vector<double>{1, 3, 2}));
  const RealSignal sym{3, 1, 2, 2, 1};
  EXPECT_EQ(flip(sym).vector(), sym.vector());
  std::mt19937_64 g(4);
  const auto x = rand_signal(g, 8);
  EXPECT_EQ(flip(flip(x)).vector(), x.vector());
  const auto a = dft(flip(x)), b = dft(x);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_LT(std::abs(a[k] - std::conj(b[k])), 1e-12);
}

TEST(Moments, DeltaAndShiftInvariance) {
  const RealSignal d{1, 0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(m1(d), 0.2);
  EXPECT_NEAR(max_abs_diff(m2(d), RealSignal{0.2, 0, 0, 0, 0}), 0.0, 1e-15);
  std::mt19937_64 g(5);
  for (int t = 0; t < 20; ++t) {
    const auto x = rand_signal(g, 7);
    ASSERT_LE(max_abs_diff(m2(circular_shift(x, t)), m2(x)), 1e-12);
    const auto p = dft(m2(x)), s = dft(x);
    for (std::size_t k = 0; k < 7; ++k) ASSERT_NEAR(std::abs(p[k] - std::norm(s[k]) / 7.0), 0.0, 1e-10);
  }
}

TEST(Estimators, MeanNoiselessAndMonteCarlo) {
  const auto x = square_wave(41, 21);
  EXPECT_DOUBLE_EQ(estimate_mean(SampleSet(std::vector<RealSignal>{x}, 0.0)), m1(x));
  const auto clean = generate_samples(x, 0.0, 50, 1).samples;
  EXPECT_NEAR(estimate_mean(clean), m1(x), 1e-15);
  const auto X = generate_samples(x, 1.0, 100000, 2).samples;
  EXPECT_NEAR(estimate_mean(X), 21.0 / 41.0, 4.0 / std::sqrt(41.0 * 1e5));
}

TEST(Estimators, PowerSpectrumNoiseless) {
  const auto x = square_wave(41, 21);
  const auto X = generate_samples(x, 0.0, 30, 3).samples;
  const auto raw = estimate_raw_power(X);
  EXPECT_NEAR(raw[0], 441.0, 1e-9);
  const auto p = estimate_power_spectrum(X);
  const auto s = dft(x);
  for (std::size_t k = 1; k < 41; ++k) EXPECT_NEAR(p.amp(k), std::abs(s[k]), 1e-10);
  EXPECT_NEAR(p.mean_coeff(), 21.0, 1e-12);
}

TEST(Estimators, PowerSpectrumPureNoise) {
  const auto X = noisy_copies(RealSignal::zeros(9), 1.0, 100000, 4);
  const auto raw = estimate_raw_power(X);
  for (std::size_t k = 1; k < 9; ++k) EXPECT_LT(std::abs(raw[k]), 4.0 * 9.0 / std::sqrt(1e5)) << k;
}

// Mean of 200 independent raw estimates vs the true power, bin by bin.
TEST(Estimators, RawPowerUnbiased) {
  std::mt19937_64 g(6);
  const auto x = rand_signal(g, 7);
  const auto s = dft(x);
  const int reps = 200;
  std::vector<double> sum(7, 0.0), sq(7, 0.0);
  for (int r = 0; r < reps; ++r) {
    const auto raw = estimate_raw_power(generate_samples(x, 1.0, 1000, 1000 + r).samples);
    for (std::size_t k = 0; k < 7; ++k) sum[k] += raw[k], sq[k] += raw[k] * raw[k];
  }
  for (std::size_t k = 1; k < 7; ++k) {
    const double m = sum[k] / reps, v = sq[k] / reps - m * m;
    EXPECT_LT(std::abs(m - std::norm(s[k])), 4.0 * std::sqrt(v / reps)) << k;
  }
}

TEST(Estimators, UnscaledBiasSubtractsTauSquared) {
  const auto X = noisy_copies(RealSignal::zeros(5), 1.0, 2000, 5);
  const auto a = estimate_raw_power(X, NoiseBias::scaled);
  const auto b = estimate_raw_power(X, NoiseBias::unscaled);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_NEAR(b[k] - a[k], 4.0, 1e-9);
}

TEST(Profile, RejectsAsymmetryAndNegatives) {
  EXPECT_THROW(AmplitudeProfile({0, 1, 2}, 0), std::invalid_argument);
  EXPECT_THROW(AmplitudeProfile({0, -1, -1}, 0), std::invalid_argument);
  const AmplitudeProfile p({0, 1, 0, 0, 1}, 0);
  EXPECT_EQ(p.torus_dimension(), 1u);
  EXPECT_FALSE(p.degenerate());
}

TEST(Projection, AttainsAmplitudesAndIsIdempotent) {
  std::mt19937_64 g(7);
  for (std::size_t L : {5u, 8u, 11u, 16u}) {
    for (int t = 0; t < 20; ++t) {
      const auto y = rand_signal(g, L);
      const auto prof = AmplitudeProfile::of(y);
      const auto z = rand_signal(g, L);
      const auto p = project_to_manifold(z, prof);
      const auto s = dft(p);
      for (std::size_t k = 1; k < L; ++k) ASSERT_NEAR(std::abs(s[k]), prof.amp(k), 1e-12 * (1 + prof.amp(k)));
      ASSERT_NEAR(s[0].real(), prof.mean_coeff(), 1e-12 * (1 + std::abs(prof.mean_coeff())));
      ASSERT_LE(max_abs_diff(project_to_manifold(p, prof), p), 1e-12);
      ASSERT_LE(manifold_defect(p, prof), 1e-10);
    }
  }
}

TEST(Projection, ZeroCoefficientGetsZeroPhase) {
  // z has no energy at k = 1 or at the Nyquist bin.
  const RealSignal z{1, 0, 1, 0, 1, 0};
  const AmplitudeProfile prof({3, 1, 0, 2, 0, 1}, 3);
  const auto s = dft(project_to_manifold(z, prof));
  EXPECT_NEAR(s[1].real(), 1.0, 1e-12);
  EXPECT_NEAR(s[1].imag(), 0.0, 1e-12);
  EXPECT_NEAR(s[3].real(), 2.0, 1e-12);
}

TEST(Projection, NyquistKeepsSign) {
  const RealSignal z{1, -1, 1, -1};  // Nyquist coefficient +4
  const AmplitudeProfile prof({0, 0, 2, 0}, 0);
  EXPECT_NEAR(dft(project_to_manifold(z, prof))[2].real(), 2.0, 1e-12);
  EXPECT_NEAR(dft(project_to_manifold(-z, prof))[2].real(), -2.0, 1e-12);
}

TEST(ManifoldPoint, DegenerateAndRandom) {
  const AmplitudeProfile flat({4, 0, 0, 0}, 4);
  EXPECT_EQ(random_manifold_point(flat, 1).vector(), (std::vector<double>(4, 1.0)));
  std::mt19937_64 g(8);
  const auto prof = AmplitudeProfile::of(rand_signal(g, 9));
  const auto a = random_manifold_point(prof, 1), b = random_manifold_point(prof, 2);
  EXPECT_LT(manifold_defect(a, prof), 1e-10);
  EXPECT_GT(max_abs_diff(a, b), 1e-3);
  const auto X = generate_samples(rand_signal(g, 9), 0.3, 20, 9).samples;
  EXPECT_LT(manifold_defect(random_manifold_point(prof, 3, InitMode::sample, &X), prof), 1e-10);
  EXPECT_THROW(random_manifold_point(prof, 3, InitMode::sample), std::invalid_argument);
}

TEST(Rotation, IdentityRampNormAndCommutation) {
  std::mt19937_64 g(9);
  for (std::size_t L : {5u, 6u, 9u}) {
    const auto x = rand_signal(g, L);
    EXPECT_LE(max_abs_diff(apply_rotation(CirculantRotation::identity(L), x), x), 1e-12);
    for (long long r = 0; r < static_cast<long long>(L); ++r)
      EXPECT_LE(max_abs_diff(apply_rotation(CirculantRotation::shift(L, r), x), circular_shift(x, r)), 1e-10);
    const auto C = CirculantRotation::random(L, 11);
    const auto y = apply_rotation(C, x);
    EXPECT_NEAR(norm(y), norm(x), 1e-10 * norm(x));
    for (long long j = 0; j < 4; ++j)
      EXPECT_LE(max_abs_diff(apply_rotation(C, circular_shift(x, j)), circular_shift(y, j)), 1e-10);
    EXPECT_LE(max_abs_diff(apply_rotation(C.inverse(), y), x), 1e-10);
  }
}

TEST(Nrmse, CasesAndBruteForce) {
  const auto x = square_wave(11, 4);
  EXPECT_NEAR(nrmse(circular_shift(x, 3), x), 0.0, 1e-15);
  EXPECT_NEAR(nrmse(2.0 * x, x), 1.0, 1e-12);
  EXPECT_THROW(nrmse(x, RealSignal::zeros(11)), MraError);
  std::mt19937_64 g(10);
  for (int t = 0; t < 50; ++t) {
    const auto z = oracle::gaussian(g, 6), y = oracle::gaussian(g, 6);
    double best = INFINITY;
    for (int r = 0; r < 6; ++r) best = std::min(best, oracle::sqdist(z, oracle::shift(y, r)));
    ASSERT_NEAR(nrmse(RealSignal(z), RealSignal(y)), std::sqrt(best) / oracle::nrm(y), 1e-12);
  }
  // Shifting both arguments by the same amount leaves the error unchanged.
  const auto z = rand_signal(g, 11), w = rand_signal(g, 11);
  EXPECT_NEAR(nrmse(circular_shift(z, 4), circular_shift(w, 4)), nrmse(z, w), 1e-12);
}

TEST(SampleSet, ValidationAndViews) {
  EXPECT_THROW(SampleSet(1, 0.0, {1.0}), std::invalid_argument);
  EXPECT_THROW(SampleSet(3, -1.0, {1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(SampleSet(3, 0.0, {1, 2}), std::invalid_argument);
  const SampleSet X(2, 0.5, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(X.size(), 3u);
  EXPECT_EQ(X.prefix(2).size(), 2u);
  const std::size_t idx[] = {2, 0};
  EXPECT_EQ(X.subset(idx).signal(0).vector(), (std::vector<double>{5, 6}));
}
