#pragma once

// Thin FFTW wrapper: one cached plan per (length, direction).

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <utility>

namespace mra::fft {

enum class Direction : int {
  /// X[k] = sum_n x[n] exp(+2 pi i n k / L)
  plus = FFTW_BACKWARD,
  /// X[k] = sum_n x[n] exp(-2 pi i n k / L)
  minus = FFTW_FORWARD,
};

namespace detail {

class PlanCache {
public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, Direction dir) {
    std::lock_guard lk(mu_);
    const auto key = std::make_pair(n, static_cast<int>(dir));
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), in, out, static_cast<int>(dir),
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized out-of-place complex transform of length n. `in` and `out`
/// must not alias.
inline void transform(const std::complex<double>* in, std::complex<double>* out, std::size_t n,
                      Direction dir) {
  fftw_plan p = detail::PlanCache::instance().get(n, dir);
  // fftw_execute_dft is thread-safe for an existing plan.
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace mra::fft
