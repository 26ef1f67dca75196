#include <gtest/gtest.h>

#include <random>

#include "mra/baselines.hpp"
#include "mra/data.hpp"
#include "mra/mca.hpp"
#include "oracles.hpp"

using namespace mra;

namespace {

std::vector<oracle::vec> random_set(std::mt19937_64& g, std::size_t N, std::size_t L, double s = 1.0) {
  std::vector<oracle::vec> X(N);
  for (auto& x : X) x = oracle::gaussian(g, L, s);
  return X;
}

}  // namespace

TEST(EMStep, MatchesDirectSummation) {
  std::mt19937_64 g(31);
  for (int t = 0; t < 50; ++t) {
    const std::size_t L = 2 + t % 11;
    const double tau = 0.5 + 0.05 * t;
    const auto raw = random_set(g, 20, L);
    const auto z = oracle::gaussian(g, L);
    const auto st = em_step_full(RealSignal(z), oracle::samples(raw, tau));
    const auto ref = oracle::em_step(z, raw, tau);
    for (std::size_t n = 0; n < L; ++n) ASSERT_NEAR(st.next[n], ref[n], 1e-10);
    const double ll = oracle::em_log_likelihood(z, raw, tau);
    ASSERT_NEAR(st.logLikelihood, ll, 1e-10 * std::max(1.0, std::abs(ll)));
  }
}

TEST(EMStep, ZeroTemperatureIsHardAlignment) {
  std::mt19937_64 g(32);
  const auto raw = random_set(g, 30, 8);
  const RealSignal z(oracle::gaussian(g, 8));
  const auto a = em_step(z, oracle::samples(raw, 0.0));
  EXPECT_LE(distance(a, averaged_align(z, oracle::samples(raw, 0.0)).average), 1e-14);
  // Very small tau converges to the same thing.
  EXPECT_LE(distance(em_step(z, oracle::samples(raw, 1e-4)), a), 1e-8);
}

TEST(EMStep, SingleSampleConvexCombination) {
  const RealSignal z{1, 3, -2, 0, 1};
  const auto next = em_step(z, SampleSet(std::vector<RealSignal>{z}, 1.0));
  // A convex combination of shifts keeps the mean and shrinks the norm.
  EXPECT_NEAR(m1(next), m1(z), 1e-14);
  EXPECT_LE(norm(next), norm(z) + 1e-12);
}

TEST(EMConfig, Validation) {
  EMConfig c;
  EXPECT_NO_THROW(c.validate());
  c.tol = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.maxIter = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(EMReconstruct, EasyRegimeAndMonotoneLikelihood) {
  const auto x = square_wave(41, 21);
  std::vector<double> err;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto X = generate_samples(x, 0.01, 1000, 40 + s).samples;
    EMConfig c;
    c.seed = s;
    c.warmStartIters = 20;
    const auto r = em_reconstruct(X, c);
    err.push_back(nrmse(r.signal, x));
  }
  std::sort(err.begin(), err.end());
  EXPECT_LE(err[5], 0.05);

  const auto X = generate_samples(x, 1.0, 2000, 50).samples;
  EMConfig c;
  c.warmStartIters = 10;
  c.warmStartBatch = 200;
  c.maxIter = 300;
  const auto r = em_reconstruct(X, c);
  for (std::size_t i = 1; i < r.logLikelihood.size(); ++i)
    ASSERT_GE(r.logLikelihood[i], r.logLikelihood[i - 1] - 1e-8 * std::abs(r.logLikelihood[i - 1])) << i;
}

TEST(EMReconstruct, NoWarmStartIsPlainLoop) {
  const auto x = square_wave(11, 5);
  const auto X = generate_samples(x, 0.5, 300, 51).samples;
  EMConfig c;
  c.warmStartIters = 0;
  c.warmStartBatch = X.size();
  c.maxIter = 25;
  c.seed = 3;
  const auto r = em_reconstruct(X, c);
  const auto idx = sample_without_replacement(X.size(), X.size(), derive_key(c.seed, 0xE3u));
  RealSignal z = X.signal(idx.front());
  std::vector<double> ll;
  for (std::size_t m = 0; m < r.iterations; ++m) {
    const auto st = em_step_full(z, X);
    ll.push_back(st.logLikelihood);
    z = st.next;
  }
  EXPECT_EQ(z.vector(), r.signal.vector());
  EXPECT_EQ(ll, r.logLikelihood);
}

TEST(SampleWithoutReplacement, Distinct) {
  const auto s = sample_without_replacement(100, 60, 5);
  std::vector<char> seen(100, 0);
  for (auto i : s) {
    ASSERT_LT(i, 100u);
    ASSERT_FALSE(seen[i]);
    seen[i] = 1;
  }
  EXPECT_EQ(s.size(), 60u);
}

TEST(Bispectrum, MatchesDirectSummation) {
  std::mt19937_64 g(33);
  for (int t = 0; t < 500; ++t) {
    const std::size_t L = 2 + t % 11;
    const auto raw = random_set(g, 1 + t % 7, L);
    const auto B = estimate_bispectrum(oracle::samples(raw, 1.0));
    const auto ref = oracle::bispectrum(raw);
    for (std::size_t i = 0; i < L * L; ++i) ASSERT_LT(std::abs(B.values()[i] - ref[i]), 1e-10 * (1 + std::abs(ref[i])));
  }
}

TEST(Bispectrum, SingleSampleAndShiftInvariance) {
  std::mt19937_64 g(34);
  const RealSignal x(oracle::gaussian(g, 9));
  const auto exact = Bispectrum::of(x);
  const auto one = estimate_bispectrum(SampleSet(std::vector<RealSignal>{x}, 0.0));
  std::vector<RealSignal> shifted;
  for (int r = 0; r < 9; ++r) shifted.push_back(circular_shift(x, r));
  const auto many = estimate_bispectrum(SampleSet(shifted, 0.0));
  for (std::size_t i = 0; i < 81; ++i) {
    ASSERT_LT(std::abs(one.values()[i] - exact.values()[i]), 1e-10);
    ASSERT_LT(std::abs(many.values()[i] - exact.values()[i]), 1e-10);
  }
  // Across a packing block boundary, with arbitrary per-sample shifts.
  const auto raw = random_set(g, kBispectrumBlock + 11, 7);
  std::vector<RealSignal> a, b;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    a.emplace_back(raw[i]);
    b.push_back(circular_shift(RealSignal(raw[i]), static_cast<long long>(i * 5)));
  }
  const auto Ba = estimate_bispectrum(SampleSet(a, 1.0)), Bb = estimate_bispectrum(SampleSet(b, 1.0));
  for (std::size_t i = 0; i < 49; ++i) ASSERT_LT(std::abs(Ba.values()[i] - Bb.values()[i]), 1e-10);
}

TEST(Bispectrum, PureNoiseVanishes) {
  const std::size_t L = 5, N = 100000;
  const auto X = noisy_copies(RealSignal::zeros(L), 1.0, N, 35);
  const auto B = estimate_bispectrum(X);
  // Per-sample products of three Gaussian coefficients have variance of order L^3 tau^6.
  const double se = std::sqrt(std::pow(static_cast<double>(L), 3) / static_cast<double>(N));
  for (std::size_t i = 0; i < L * L; ++i) {
    if (i == 0) continue;  // B(0,0) = |Xi[0]|^2 Xi[0] has mean zero too but larger spread
    EXPECT_LT(std::abs(B.values()[i]), 5.0 * 2.0 * se) << i;
  }
}

TEST(PhaseSync, ExactPhasesFixedPoint) {
  std::mt19937_64 g(36);
  for (std::size_t L : {5u, 7u, 10u, 41u}) {
    const RealSignal x(oracle::gaussian(g, L));
    const auto s = dft(x);
    // Gauge u[1] = 1 by shifting x so that X[1] is real positive.
    const double ph1 = std::arg(s[1]);
    Spectrum t = s;
    for (std::size_t k = 1; k <= (L - 1) / 2; ++k) {
      t[k] *= std::polar(1.0, -ph1 * static_cast<double>(k));
      t[L - k] = std::conj(t[k]);
    }
    const auto y = idft(t);
    const auto r = synchronize_phases(Bispectrum::of(y), 1e-12, 5000, 1);
    ASSERT_TRUE(r.converged);
    const auto yt = dft(y);
    for (std::size_t k = 1; k <= (L - 1) / 2; ++k) ASSERT_LT(std::abs(r.phases[k] - yt[k] / std::abs(yt[k])), 1e-8);
    for (const auto& u : r.phases) ASSERT_NEAR(std::abs(u), 1.0, 1e-12);
    ASSERT_LT(std::abs(r.phases[1] - cdouble(1, 0)), 1e-12);
  }
}

TEST(PhaseSync, SymmetricSignalAllOnes) {
  const RealSignal x{3, 1, 0.5, 0.5, 1};
  const auto r = synchronize_phases(Bispectrum::of(x), 1e-12, 1000, 2);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_LT(std::abs(r.phases[k] - cdouble(1, 0)), 1e-9);
}

TEST(PhaseSync, InsufficientSignal) {
  // Zero amplitude at k = 2.
  Spectrum s = Spectrum::zeros(7);
  s[0] = 1;
  s[1] = s[6] = 2;
  s[3] = cdouble(1, 1);
  s[4] = std::conj(s[3]);
  const auto x = idft(s);
  EXPECT_THROW(synchronize_phases(Bispectrum::of(x)), MraError);
  try {
    synchronize_phases(Bispectrum::of(x));
  } catch (const MraError& e) {
    EXPECT_STREQ(e.what(), "insufficient signal");
  }
}

TEST(BispectrumReconstruct, NoiselessSquareWave) {
  const auto x = square_wave(41, 21);
  const auto X = generate_samples(x, 0.0, 100, 37).samples;
  const auto r = bispectrum_reconstruct(X);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(nrmse(r.signal, x), 1e-6);
}

TEST(BispectrumReconstruct, EvenLength) {
  const RealSignal x{1.0, 0.4, -0.3, 0.8, 0.1, -0.6};
  const auto X = generate_samples(x, 0.0, 30, 38).samples;
  EXPECT_LE(nrmse(bispectrum_reconstruct(X).signal, x), 1e-8);
}

TEST(Oracle, ExactAndErrors) {
  const auto x = square_wave(41, 21);
  const auto d = generate_samples(x, 0.0, 60, 39);
  EXPECT_LE(distance(oracle_average(d.samples, d.shifts), x), 1e-13);
  std::vector<std::size_t> short_shifts(10, 0);
  EXPECT_THROW(oracle_average(d.samples, short_shifts), std::invalid_argument);
}

TEST(Template, NoiselessAndBiased) {
  const auto x = square_wave(41, 21);
  EXPECT_LE(distance(template_reconstruct(generate_samples(x, 0.0, 50, 40).samples, x), x), 1e-13);
  std::vector<double> t, m;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto X = generate_samples(x, 1.0, 10000, 60 + s).samples;
    t.push_back(nrmse(template_reconstruct(X, x), x));
    MCAConfig c;
    c.initSeed = s;
    c.recordLoss = false;
    m.push_back(nrmse(mca_reconstruct(X, c).signal, x));
  }
  std::sort(t.begin(), t.end());
  std::sort(m.begin(), m.end());
  EXPECT_GT(t[2], m[2]);
}
