// Draws a sparse field with four shared directions, then compares the exact
// empirical spectrum with the one recovered from Gauss-Legendre samples.

#include <cstdio>

#include "sparsesph/sparsesph.hpp"

int main() {
  using namespace sparsesph;
  const PowerSpectrum spectrum = whittle_matern(1.5, 32);
  RandomStream rng(2024);
  const SparseField field = gen_iid_weights(spectrum, 4, WeightDistribution::gaussian, rng);

  const GridField grid = synthesize_grid(field, SphereGrid(field.lmax()));
  const auto from_grid = power_spectrum(analyze(grid));
  const auto exact = exact_empirical_spectrum(field);

  std::printf("%4s %14s %14s %14s\n", "ell", "C_ell", "exact", "grid");
  for (int l = 0; l <= 8; ++l) std::printf("%4d %14.6e %14.6e %14.6e\n", l, spectrum[l], exact[l], from_grid[l]);
  std::printf("parameters %lld, dense coefficients %lld\n", static_cast<long long>(field.parameter_count()),
              static_cast<long long>(field.dense_coefficient_count()));
  return 0;
}
