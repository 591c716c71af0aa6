// Reduced bispectrum of the local f_NL weights: closed form, Isserlis
// expectation and a Monte Carlo estimate.

#include <cstdio>

#include "sparsesph/sparsesph.hpp"

int main() {
  using namespace sparsesph;
  const PowerSpectrum spectrum = whittle_matern(1.5, 4);
  const double fnl = 0.05;
  const RandomStream rng(11);
  for (const auto& [l1, l2, l3] : {std::array{2, 2, 2}, std::array{1, 2, 3}, std::array{0, 4, 4}}) {
    const auto formula = reduced_bispectrum_formula(spectrum, fnl, l1, l2, l3, true);
    const auto mc = mc_reduced_bispectrum(spectrum, fnl, l1, l2, l3, 20000, rng);
    std::printf("(%d,%d,%d) formula %.6e  oracle %.6e  mc %.6e +- %.1e\n", l1, l2, l3, formula.value, *formula.oracle,
                mc.estimate, mc.standard_error);
  }
  return 0;
}
