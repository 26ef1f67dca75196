#pragma once

// Block-parallel map with an ordered reduction.
//
// Work is split into a fixed number of blocks that depends only on the problem
// size, never on the thread count. Each block writes its own partial result and
// callers fold the partials in block order, so results are bitwise identical
// for any thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mra::parallel {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> n{1};
  return n;
}

// Set on pool workers so nested for_blocks calls run inline.
inline bool& in_pool() {
  thread_local bool flag = false;
  return flag;
}
}  // namespace detail

/// Number of worker threads used by `for_blocks`. 0 selects hardware concurrency.
inline void set_threads(unsigned n) {
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  detail::thread_setting().store(n);
}

inline unsigned threads() { return detail::thread_setting().load(); }

/// Invoke fn(b) for b in [0, blocks). Exceptions from any block are rethrown.
template <class Fn>
void for_blocks(std::size_t blocks, Fn&& fn) {
  const unsigned t = static_cast<unsigned>(std::min<std::size_t>(threads(), blocks));
  if (t <= 1 || detail::in_pool()) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    const bool outer = detail::in_pool();
    detail::in_pool() = true;
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) break;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
      }
    }
    detail::in_pool() = outer;
  };
  std::vector<std::jthread> pool;
  pool.reserve(t - 1);
  for (unsigned i = 1; i < t; ++i) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (err) std::rethrow_exception(err);
}

/// Half-open index range of block b when n items are cut into blocks of `size`.
struct BlockRange {
  std::size_t begin, end;
};

inline std::size_t block_count(std::size_t n, std::size_t size) { return (n + size - 1) / size; }

inline BlockRange block_range(std::size_t b, std::size_t n, std::size_t size) {
  return {b * size, std::min(n, (b + 1) * size)};
}

}  // namespace mra::parallel
