// Loss over the phase torus of x = (4/5, -1/5, -1/5, -1/5, -1/5) and its
// critical-cell census.

#include <cstdio>

#include "mra/landscape.hpp"

int main() {
  using namespace mra;
  const RealSignal x{0.8, -0.2, -0.2, -0.2, -0.2};
  const auto grid = torus_loss_grid(x, 1.0, 20000, 64, 7);
  const auto c = morse_census(grid, 3);
  std::printf("minima %zu  saddles %zu  maxima %zu  euler %lld\n", c.minima, c.saddles, c.maxima, c.euler());

  for (std::size_t L = 2; L <= 9; ++L) std::printf("a_%zu = %.6f\n", L, expected_max_gaussian(L));
}
