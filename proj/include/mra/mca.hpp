#pragma once

// Moment-constrained alignment: align to the current template, average, and
// project back onto the phase manifold fixed by the estimated power spectrum.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mra/alignment.hpp"
#include "mra/error.hpp"
#include "mra/signal.hpp"

namespace mra {

struct MCAConfig {
  double delta = 1e-6;
  double alpha = 1.0;
  std::size_t maxIter = 5000;
  std::uint64_t initSeed = 0;
  InitMode initMode = InitMode::sample;
  bool recordLoss = true;
  NoiseBias noiseBias = NoiseBias::scaled;

  void validate() const {
    if (!(delta > 0.0)) throw ConfigError("mca: delta must be > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("mca: alpha must lie in (0, 1]");
    if (maxIter < 1) throw ConfigError("mca: maxIter must be >= 1");
  }
};

struct ReconstructionResult {
  RealSignal signal;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> lossTrace;
  double wallTimeSeconds = 0.0;
  /// Empty unless something degenerate happened.
  std::string warning;
};

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace detail

inline RealSignal mca_step_from(const RealSignal& z, const AlignmentOutcome& a, const AmplitudeProfile& profile,
                                double alpha) {
  if (alpha == 1.0) return project_to_manifold(a.average, profile);
  return project_to_manifold((1.0 - alpha) * z + alpha * a.average, profile);
}

/// project((1 - alpha) z + alpha * averaged_align(z, X).average).
inline RealSignal mca_step(const RealSignal& z, const SampleSet& X, const AmplitudeProfile& profile, double alpha = 1.0) {
  return mca_step_from(z, averaged_align(z, X), profile, alpha);
}

inline ReconstructionResult mca_reconstruct(const SampleSet& X, const MCAConfig& cfg = {},
                                            std::optional<AmplitudeProfile> given = std::nullopt) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const AmplitudeProfile profile = given ? *given : estimate_power_spectrum(X, cfg.noiseBias);
  ReconstructionResult res;
  if (profile.degenerate()) {
    res.signal = RealSignal::constant(X.length(), profile.mean_coeff() / static_cast<double>(X.length()));
    res.converged = true;
    res.warning = "degenerate profile";
    res.wallTimeSeconds = detail::seconds_since(t0);
    return res;
  }

  RealSignal z = random_manifold_point(profile, cfg.initSeed, cfg.initMode, &X);
  const PackedSamples P(X);
  AlignmentOutcome a = averaged_align(z, P);
  for (std::size_t m = 1; m <= cfg.maxIter; ++m) {
    RealSignal next = mca_step_from(z, a, profile, cfg.alpha);
    const double step = distance(next, z);
    z = std::move(next);
    res.iterations = m;
    const bool done = step <= cfg.delta;
    // The alignment of the new iterate is needed by the next step anyway; after
    // the final step it is only needed for the trace.
    if (!done && m < cfg.maxIter) {
      a = averaged_align(z, P);
      if (cfg.recordLoss) res.lossTrace.push_back(a.loss());
    } else if (cfg.recordLoss) {
      res.lossTrace.push_back(empirical_loss(z, P));
    }
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.signal = std::move(z);
  res.wallTimeSeconds = detail::seconds_since(t0);
  return res;
}

}  // namespace mra
