#include <gtest/gtest.h>

#include <cstdlib>

#include "sparsesph/harmonic.hpp"
#include "sparsesph/model.hpp"
#include "stats.hpp"

using namespace sparsesph;

namespace {

// Direct O(L^2) evaluation of the quadratic Wick weights.
std::vector<double> direct_quadratic_weights(const PowerSpectrum& s, double fnl, const std::vector<double>& z) {
  const int L = s.lmax();
  std::vector<double> eta(L + 1);
  for (int l = 0; l <= L; ++l) {
    double q = 0.0;
    for (int a = 0; a <= L; ++a)
      for (int b = 0; b <= L; ++b) q += 3.0 * fnl * std::sqrt(s[a] * s[b]) * (z[a] * z[b] - (a == b ? 1.0 : 0.0));
    eta[l] = std::sqrt(kFourPi * s[l]) * z[l] + q;
  }
  return eta;
}

SparseField single_term(int L, int l, double eta, const UnitVector& xi) {
  std::vector<std::vector<double>> w(L + 1, std::vector<double>{0.0});
  w[l][0] = eta;
  return SparseField::shared({xi}, w);
}

double relative_error(const HarmonicCoefficients& a, const HarmonicCoefficients& b) {
  HarmonicCoefficients d = a;
  d -= b;
  return d.norm() / b.norm();
}

}  // namespace

TEST(SparseField, LayoutsAndCounts) {
  RandomStream rng(1);
  const auto f = gen_iid_weights(whittle_matern(1.5, 128), 4, WeightDistribution::gaussian, rng);
  EXPECT_TRUE(f.shared_directions());
  EXPECT_EQ(f.weight_count(), 129 * 4);
  EXPECT_EQ(f.direction_count(), 4);
  EXPECT_EQ(f.parameter_count(), 520);
  EXPECT_EQ(f.dense_coefficient_count(), 129 * 129);
  EXPECT_EQ(f.provenance().generator, "iid-gaussian");
  EXPECT_EQ(f.provenance().parameters.at("K"), 4.0);

  const UnitVector a(1, 0, 0), b(0, 1, 0), c(0, 0, 1);
  const auto r = SparseField::ragged({{a}, {b, c}}, {{1.0}, {2.0, -1.0}});
  EXPECT_FALSE(r.shared_directions());
  EXPECT_EQ(r.K(0), 1u);
  EXPECT_EQ(r.K(1), 2u);
  EXPECT_THROW(r.directions(), InvalidArgument);
  EXPECT_EQ(r.direction_count(), 3);

  EXPECT_THROW(SparseField::ragged({{a}}, {{1.0}, {2.0}}), InvalidArgument);
  EXPECT_THROW(SparseField::ragged({{a}, {b}}, {{1.0}, {2.0, 3.0}}), InvalidArgument);
  EXPECT_THROW(SparseField::shared({a}, {{1.0, 2.0}}), InvalidArgument);
  EXPECT_THROW(SparseField::shared({a}, {{NAN}}), InvalidArgument);
}

TEST(SparseField, RaggedMatchesSharedWhenListsCoincide) {
  RandomStream rng(2);
  const auto f = gen_iid_weights(whittle_matern(1.0, 6), 3, WeightDistribution::gaussian, rng);
  std::vector<std::vector<UnitVector>> dirs(7, f.directions());
  const auto g = SparseField::ragged(dirs, f.weights());
  EXPECT_LT(relative_error(harmonic_coeffs(g), harmonic_coeffs(f)), 1e-15);
  const auto ef = exact_empirical_spectrum(f), eg = exact_empirical_spectrum(g);
  for (int l = 0; l <= 6; ++l) EXPECT_NEAR(eg[l], ef[l], 1e-12 * (ef[l] + 1e-300));
  const UnitVector x(0.3, -0.2, 0.9);
  EXPECT_NEAR(synthesize_at(g, x), synthesize_at(f, x), 1e-12);
}

TEST(IidWeights, RademacherMagnitudeIsExact) {
  const auto s = whittle_matern(1.5, 20);
  RandomStream rng(3);
  const int K = 5;
  const auto f = gen_iid_weights(s, K, WeightDistribution::rademacher, rng);
  int plus = 0;
  for (int l = 0; l <= 20; ++l)
    for (int k = 0; k < K; ++k) {
      EXPECT_EQ(std::abs(f.weight(l, k)), std::sqrt(kFourPi * s[l] / K));
      plus += f.weight(l, k) > 0;
    }
  EXPECT_GT(plus, 20);
  EXPECT_LT(plus, 85);
  EXPECT_EQ(f.provenance().generator, "iid-rademacher");
}

TEST(IidWeights, GaussianVariance) {
  const auto s = whittle_matern(1.5, 6);
  const RandomStream root(4);
  const int M = 10000, K = 4, l = 3;
  std::vector<double> sq;
  for (int r = 0; r < M; ++r) {
    RandomStream rng = root.split(r);
    const auto f = gen_iid_weights(s, K, WeightDistribution::gaussian, rng);
    sq.push_back(f.weight(l, r % K) * f.weight(l, r % K));
  }
  const auto m = testkit::moments(sq);
  EXPECT_NEAR(m.mean, kFourPi * s[l] / K, 5.0 * m.se);
}

TEST(IidWeights, ZeroSpectrumGivesZeroWeights) {
  const PowerSpectrum s({1.0, 0.0, 0.5});
  RandomStream rng(5);
  for (auto dist : {WeightDistribution::gaussian, WeightDistribution::rademacher}) {
    const auto f = gen_iid_weights(s, 3, dist, rng);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(f.weight(1, k), 0.0);
  }
  EXPECT_THROW(gen_iid_weights(s, 0, WeightDistribution::gaussian, rng), InvalidArgument);
}

TEST(FnlWeights, ZeroCouplingIsGaussian) {
  const auto s = whittle_matern(1.5, 10);
  RandomStream a(6), b(6), c(6);
  const auto f = gen_fnl_weights(s, 0.0, a);
  const auto g = gen_general_quadratic_weights(s, QuadraticCoefficients::zero(), b);
  sample_uniform(c);
  for (int l = 0; l <= 10; ++l) {
    const double expected = std::sqrt(kFourPi * s[l]) * c.normal();
    EXPECT_EQ(f.weight(l, 0), expected);
    EXPECT_EQ(g.weight(l, 0), expected);
  }
  EXPECT_EQ(f.directions(), g.directions());
}

TEST(FnlWeights, ClosedFormMatchesDoubleSum) {
  const auto s = whittle_matern(1.2, 30);
  for (double fnl : {0.05, -1.0, 7.0})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      RandomStream rng(seed), replay(seed);
      const auto f = gen_fnl_weights(s, fnl, rng);
      sample_uniform(replay);
      std::vector<double> z(31);
      for (auto& v : z) v = replay.normal();
      const auto eta = direct_quadratic_weights(s, fnl, z);
      for (int l = 0; l <= 30; ++l) EXPECT_NEAR(f.weight(l, 0), eta[l], 1e-10 * std::max(1.0, std::abs(eta[l])));
    }
}

TEST(FnlWeights, GenericPathAgreesWithSeparable) {
  const auto s = whittle_matern(1.5, 12);
  const double fnl = 0.3;
  auto generic = QuadraticCoefficients::from_function(
      [&s, fnl](int, int a, int b) { return 3.0 * fnl * std::sqrt(s[a] * s[b]); });
  RandomStream a(7), b(7), c(7);
  const auto f = gen_fnl_weights(s, fnl, a);
  const auto g = gen_general_quadratic_weights(s, generic, b);
  const auto h = gen_general_quadratic_weights(s, QuadraticCoefficients::fnl(s, fnl), c);
  EXPECT_EQ(f, h);
  EXPECT_EQ(f.provenance().generator, "fnl");
  EXPECT_EQ(g.provenance().generator, "general-quadratic");
  for (int l = 0; l <= 12; ++l) EXPECT_NEAR(g.weight(l, 0), f.weight(l, 0), 1e-12);
}

TEST(FnlWeights, AsymmetricCoefficientsAreSymmetrized) {
  const auto s = whittle_matern(1.5, 5);
  const auto asym = QuadraticCoefficients::from_function([](int, int a, int b) { return a < b ? 1.0 : 0.0; });
  const auto sym = QuadraticCoefficients::from_function([](int, int a, int b) { return a == b ? 0.0 : 0.5; });
  RandomStream a(8), b(8);
  EXPECT_EQ(gen_general_quadratic_weights(s, asym, a).weights(), gen_general_quadratic_weights(s, sym, b).weights());
}

TEST(FnlWeights, Centering) {
  const auto s = whittle_matern(1.5, 6);
  const RandomStream root(9);
  const int M = 100000;
  std::vector<std::vector<double>> eta(7, std::vector<double>(M));
  for (int r = 0; r < M; ++r) {
    RandomStream rng = root.split(r);
    const auto f = gen_fnl_weights(s, 0.5, rng);
    for (int l = 0; l <= 6; ++l) eta[l][r] = f.weight(l, 0);
  }
  for (int l = 0; l <= 6; ++l) {
    const auto m = testkit::moments(eta[l]);
    EXPECT_NEAR(m.mean, 0.0, 5.0 * m.se) << l;
  }
}

TEST(GeneralQuadratic, DecayingFamilyIsCentered) {
  const auto s = whittle_matern(1.5, 8);
  const auto c = QuadraticCoefficients::decaying(s, 4.0);
  EXPECT_DOUBLE_EQ(c(3, 2, 2), std::sqrt(s[3]));
  EXPECT_DOUBLE_EQ(c(3, 1, 2), std::sqrt(s[3]) / 16.0);
  const RandomStream root(10);
  const int M = 10000;
  std::vector<std::vector<double>> eta(9, std::vector<double>(M));
  for (int r = 0; r < M; ++r) {
    RandomStream rng = root.split(r);
    const auto f = gen_general_quadratic_weights(s, c, rng);
    for (int l = 0; l <= 8; ++l) eta[l][r] = f.weight(l, 0);
  }
  for (int l = 0; l <= 8; ++l) {
    const auto m = testkit::moments(eta[l]);
    EXPECT_NEAR(m.mean, 0.0, 5.0 * m.se) << l;
  }
}

TEST(GenerateWeights, Dispatch) {
  const auto s = whittle_matern(1.5, 4);
  RandomStream a(11), b(11);
  WeightSpec spec;
  spec.kind = WeightSpec::Kind::iid_rademacher;
  spec.K = 3;
  EXPECT_EQ(generate_weights(spec, s, a), gen_iid_weights(s, 3, WeightDistribution::rademacher, b));
  spec.kind = WeightSpec::Kind::general_quadratic;
  EXPECT_THROW(generate_weights(spec, s, a), InvalidArgument);
}

TEST(Synthesis, SingleTermExamples) {
  const UnitVector xi(0.2, -0.4, 0.7);
  const auto f = single_term(0, 0, 1.0, xi);
  RandomStream rng(12);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(synthesize_at(f, sample_uniform(rng)), 1.0 / kFourPi, 1e-16);
  for (int l : {1, 5, 40}) {
    const auto g = single_term(l, l, 2.5, xi);
    EXPECT_NEAR(synthesize_at(g, xi), 2.5 * (2 * l + 1) / kFourPi, 1e-12 * (2 * l + 1));
  }
  const auto c = harmonic_coeffs(single_term(0, 0, 3.0, xi));
  EXPECT_NEAR(c(0, 0).real(), 3.0 / std::sqrt(kFourPi), 1e-15);
  EXPECT_EQ(c(0, 0).imag(), 0.0);
}

TEST(Synthesis, AdditionTheoremEquivalence) {
  RandomStream rng(13);
  const auto f = gen_iid_weights(whittle_matern(1.0, 24), 6, WeightDistribution::gaussian, rng);
  const auto c = harmonic_coeffs(f);
  EXPECT_LT(c.conjugate_symmetry_defect(), 1e-14);
  for (int i = 0; i < 100; ++i) {
    const UnitVector x = sample_uniform(rng);
    const cplx dense = evaluate(c, x);
    EXPECT_NEAR(synthesize_at(f, x), dense.real(), 1e-9);
    EXPECT_LT(std::abs(dense.imag()), 1e-9);
  }
}

TEST(Synthesis, GridRoundTrip) {
  RandomStream rng(14);
  for (int L : {3, 17, 40}) {
    const auto f = gen_iid_weights(whittle_matern(1.5, L), 4, WeightDistribution::rademacher, rng);
    const auto c = harmonic_coeffs(f);
    EXPECT_LT(relative_error(analyze(synthesize_grid(f, SphereGrid(L))), c), 1e-8);
    const auto g = synthesize_grid(f, SphereGrid(L));
    EXPECT_NEAR(g.at(1, 2), synthesize_at(f, g.grid.point(1, 2)), 1e-10);
  }
}

TEST(Synthesis, RotationPreservesSpectrum) {
  RandomStream rng(15);
  for (int t = 0; t < 5; ++t) {
    const auto f = gen_iid_weights(whittle_matern(1.0, 20), 5, WeightDistribution::gaussian, rng);
    const auto R = Rotation::random(rng);
    const auto g = f.rotated(R);
    const auto pf = power_spectrum(harmonic_coeffs(f)), pg = power_spectrum(harmonic_coeffs(g));
    const auto ef = exact_empirical_spectrum(f), eg = exact_empirical_spectrum(g);
    for (int l = 0; l <= 20; ++l) {
      EXPECT_NEAR(pg[l], pf[l], 1e-10 * std::max(1.0, pf[l]));
      EXPECT_NEAR(eg[l], ef[l], 1e-10 * std::max(1.0, ef[l]));
    }
    const UnitVector x = sample_uniform(rng);
    EXPECT_NEAR(synthesize_at(g, rotate(R, x)), synthesize_at(f, x), 1e-10);
  }
}

TEST(Synthesis, RotatedFieldValuesHaveTheSameLaw) {
  const auto s = whittle_matern(1.5, 8);
  const UnitVector x(0.1, 0.5, -0.3);
  const RandomStream left(16), right(17);
  const auto R = [] {
    RandomStream r(18);
    return Rotation::random(r);
  }();
  std::vector<double> a, b;
  for (int i = 0; i < 4000; ++i) {
    RandomStream ra = left.split(i), rb = right.split(i);
    a.push_back(synthesize_at(gen_iid_weights(s, 2, WeightDistribution::rademacher, ra), x));
    b.push_back(synthesize_at(gen_iid_weights(s, 2, WeightDistribution::rademacher, rb).rotated(R), x));
  }
  EXPECT_LT(testkit::ks_two_sample(a, b), testkit::kKolmogorov999);
}

TEST(EmpiricalSpectrum, Examples) {
  RandomStream rng(19);
  const auto s = whittle_matern(1.5, 16);
  const auto f = gen_fnl_weights(s, 0.1, rng);
  const auto e = exact_empirical_spectrum(f);
  for (int l = 0; l <= 16; ++l) EXPECT_EQ(e[l], f.weight(l, 0) * f.weight(l, 0) / kFourPi);

  const auto z = SparseField::shared({UnitVector(1, 2, 3)}, std::vector<std::vector<double>>(5, {0.0}));
  for (double v : exact_empirical_spectrum(z)) EXPECT_EQ(v, 0.0);

  for (int t = 0; t < 10; ++t) {
    const auto g = gen_iid_weights(s, 4, WeightDistribution::gaussian, rng);
    const auto ex = exact_empirical_spectrum(g), co = power_spectrum(harmonic_coeffs(g));
    for (int l = 0; l <= 16; ++l) EXPECT_NEAR(ex[l], co[l], 1e-10 * std::max(1.0, co[l]));
  }
}

TEST(EmpiricalSpectrum, MatchesModelSpectrumInExpectation) {
  const int L = 32, K = 4, M = 2000;
  const auto s = whittle_matern(1.5, L);
  for (auto dist : {WeightDistribution::gaussian, WeightDistribution::rademacher}) {
    const RandomStream root(20 + static_cast<int>(dist));
    std::vector<std::vector<double>> chat(L + 1, std::vector<double>(M));
    for (int r = 0; r < M; ++r) {
      RandomStream rng = root.split(r);
      const auto e = exact_empirical_spectrum(gen_iid_weights(s, K, dist, rng));
      for (int l = 0; l <= L; ++l) chat[l][r] = e[l];
    }
    for (int l = 0; l <= L; ++l) {
      const auto m = testkit::moments(chat[l]);
      EXPECT_NEAR(m.mean, s[l], 5.0 * m.se) << to_string(dist) << " l=" << l;
    }
  }
}

TEST(Bispectrum, FormulaExamples) {
  const auto s = whittle_matern(1.5, 4);
  EXPECT_EQ(reduced_bispectrum_formula(s, 0.0, 2, 2, 2).value, 0.0);
  const auto b = reduced_bispectrum_formula(s, 0.1, 1, 2, 3);
  EXPECT_DOUBLE_EQ(b.first_order, 0.6 * (s[1] * s[2] + s[2] * s[3] + s[3] * s[1]));
  EXPECT_THROW(reduced_bispectrum_formula(s, 0.1, 1, 2, 5), InvalidArgument);
}

TEST(Bispectrum, FormulaMatchesIsserlisOracle) {
  const auto s = whittle_matern(1.5, 4);
  for (double fnl : {0.05, 0.4, -1.3})
    for (int a = 0; a <= 4; ++a)
      for (int b = a; b <= 4; ++b)
        for (int c = b; c <= 4; ++c) {
          const auto r = reduced_bispectrum_formula(s, fnl, a, b, c, true);
          ASSERT_TRUE(r.oracle.has_value());
          EXPECT_TRUE(r.agrees_with_oracle) << a << b << c << ' ' << r.value << ' ' << *r.oracle;
        }
}

TEST(Bispectrum, CubicTermScalesWithCubeOfCoupling) {
  const auto s = whittle_matern(1.5, 4);
  const auto coeffs = [&s](double f) { return QuadraticCoefficients::fnl(s, f); };
  const double f = 0.2;
  const double big = reduced_bispectrum_oracle(s, coeffs(f), 1, 2, 3) - reduced_bispectrum_formula(s, f, 1, 2, 3).first_order;
  const double small =
      reduced_bispectrum_oracle(s, coeffs(f / 2), 1, 2, 3) - reduced_bispectrum_formula(s, f / 2, 1, 2, 3).first_order;
  EXPECT_NEAR(big / small, 8.0, 1e-9);
  // independent constant: 8 * (3f)^3 * sum_{a,b,c} u_a^2 u_b^2 u_c^2 / (4 pi) with u = sqrt(C)
  const double S = s.sum();
  EXPECT_NEAR(big, 8.0 * 27.0 * f * f * f * S * S * S / kFourPi, 1e-12 * std::abs(big));
}

TEST(Bispectrum, MonteCarloMatchesOracle) {
  const auto s = whittle_matern(1.5, 4);
  const std::vector<std::array<int, 3>> triples{{2, 2, 2}, {1, 2, 3}, {0, 1, 1}, {4, 4, 4}};
  const auto mc = mc_reduced_bispectrum_many(s, 0.05, triples, 100000, RandomStream(21));
  for (std::size_t t = 0; t < triples.size(); ++t) {
    const auto& tr = triples[t];
    const double oracle = reduced_bispectrum_oracle(s, QuadraticCoefficients::fnl(s, 0.05), tr[0], tr[1], tr[2]);
    EXPECT_NEAR(mc[t].estimate, oracle, 5.0 * mc[t].standard_error) << t;
  }
  const auto eq = reduced_bispectrum_formula(s, 0.05, 2, 2, 2, true);
  ASSERT_TRUE(eq.agrees_with_oracle);
  EXPECT_NEAR(mc[0].estimate, eq.value, 5.0 * mc[0].standard_error);
}

TEST(Bispectrum, GaussianMonteCarloIsCentered) {
  const auto s = whittle_matern(1.5, 6);
  for (auto t : {std::array{1, 1, 2}, std::array{3, 4, 5}, std::array{0, 0, 0}}) {
    const auto mc = mc_reduced_bispectrum(s, 0.0, t[0], t[1], t[2], 10000, RandomStream(22));
    EXPECT_NEAR(mc.estimate, 0.0, 5.0 * mc.standard_error);
  }
  EXPECT_THROW(mc_reduced_bispectrum(s, 0.0, 1, 1, 2, 1, RandomStream(0)), InvalidArgument);
}

TEST(Bispectrum, MonteCarloIndependentOfThreadCount) {
  const auto s = whittle_matern(1.5, 4);
  ::setenv("SPARSESPH_THREADS", "1", 1);
  const auto a = mc_reduced_bispectrum(s, 0.05, 1, 2, 3, 5000, RandomStream(23));
  ::setenv("SPARSESPH_THREADS", "4", 1);
  const auto b = mc_reduced_bispectrum(s, 0.05, 1, 2, 3, 5000, RandomStream(23));
  ::unsetenv("SPARSESPH_THREADS");
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.standard_error, b.standard_error);
}

TEST(FnlCovariance, DiagonalWithQuadraticCorrection) {
  const auto s = whittle_matern(1.5, 4);
  const double fnl = 0.3;
  const auto c = QuadraticCoefficients::fnl(s, fnl);
  const double S = s.sum();
  for (int l = 0; l <= 4; ++l) {
    // E[eta_l^2] = 4 pi C_l + 2 sum_{a,b} (3 f)^2 C_a C_b
    EXPECT_NEAR(weight_covariance_oracle(s, c, l, l), kFourPi * s[l] + 18.0 * fnl * fnl * S * S, 1e-12);
    for (int lp = l + 1; lp <= 4; ++lp)
      EXPECT_NEAR(weight_covariance_oracle(s, c, l, lp), 18.0 * fnl * fnl * S * S, 1e-12);
  }

  const RandomStream root(24);
  const int M = 40000;
  const std::vector<std::pair<int, int>> idx{{2, 1}, {3, -2}, {1, 0}};
  std::vector<std::vector<double>> diag(idx.size(), std::vector<double>(M));
  std::vector<double> off_re(M), off_im(M), off_l(M);
  for (int r = 0; r < M; ++r) {
    RandomStream rng = root.split(r);
    const auto a = harmonic_coeffs(gen_fnl_weights(s, fnl, rng));
    for (std::size_t i = 0; i < idx.size(); ++i) diag[i][r] = std::norm(a(idx[i].first, idx[i].second));
    const cplx x = a(2, 1) * std::conj(a(2, 2));
    off_re[r] = x.real();
    off_im[r] = x.imag();
    off_l[r] = (a(3, 1) * std::conj(a(2, 1))).real();
  }
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const int l = idx[i].first;
    const auto m = testkit::moments(diag[i]);
    EXPECT_NEAR(m.mean, weight_covariance_oracle(s, c, l, l) / kFourPi, 5.0 * m.se) << l;
  }
  for (const auto* v : {&off_re, &off_im, &off_l}) {
    const auto m = testkit::moments(*v);
    EXPECT_NEAR(m.mean, 0.0, 5.0 * m.se);
  }
}
