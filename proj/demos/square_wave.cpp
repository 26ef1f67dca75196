// Recover a square wave from shifted noisy copies with every method and
// print the error of each.

#include <cstdio>

#include "mra/baselines.hpp"
#include "mra/data.hpp"
#include "mra/mca.hpp"

int main() {
  using namespace mra;
  const RealSignal x = square_wave(41, 21);
  const auto data = generate_samples(x, 0.5, 10000, 1);
  const SampleSet& X = data.samples;

  MCAConfig mc;
  mc.initSeed = 2;
  const auto mca = mca_reconstruct(X, mc);
  std::printf("mca         nrmse %.4f  iterations %zu\n", nrmse(mca.signal, x), mca.iterations);

  EMConfig ec;
  ec.seed = 3;
  const auto em = em_reconstruct(X, ec);
  std::printf("em          nrmse %.4f  iterations %zu\n", nrmse(em.signal, x), em.iterations);

  BispectrumConfig bc;
  bc.seed = 4;
  const auto bs = bispectrum_reconstruct(X, bc);
  std::printf("bispectrum  nrmse %.4f\n", nrmse(bs.signal, x));

  std::printf("template    nrmse %.4f\n", nrmse(template_reconstruct(X, x), x));
  std::printf("oracle      nrmse %.4f\n", nrmse(oracle_average(X, data.shifts), x));
}
