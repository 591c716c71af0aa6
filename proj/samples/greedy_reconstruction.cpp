// Matching pursuit on one multipole, and the polychromatic loop on a
// single positive-weight wave packet.

#include <cstdio>

#include "sparsesph/sparsesph.hpp"

int main() {
  using namespace sparsesph;
  RandomStream rng(7);

  const int ell = 4;
  const auto a = random_gaussian_ell(ell, 1.0, rng);
  const MonoResult mono = greedy_mono(a, 2 * ell + 1);
  std::printf("mono ell=%d: %zu steps\n", ell, mono.trace.steps.size());
  for (const auto& s : mono.trace.steps)
    std::printf("  residual %.3e  defect %.3e\n", s.residual_norm / mono.trace.initial_norm, s.defect);

  const PowerSpectrum spectrum = whittle_matern(1.5, 16);
  std::vector<std::vector<double>> w(17);
  for (int l = 0; l <= 16; ++l) w[l] = {std::sqrt(kFourPi * spectrum[l])};
  const UnitVector truth = sample_uniform(rng);
  const SparseField packet = SparseField::shared({truth}, w);
  const PolyResult poly = greedy_poly(harmonic_coeffs(packet), 0.05, 8);
  const auto& first = poly.trace.steps.front();
  std::printf("poly: %zu step(s), index %.6f, angular error %.2e rad, termination %s\n", poly.trace.steps.size(),
              first.index, first.direction.angle_to(truth), poly.trace.termination.c_str());
  return 0;
}
