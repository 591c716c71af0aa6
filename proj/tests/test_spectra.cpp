#include <gtest/gtest.h>

#include <sstream>

#include "sparsesph/spectra.hpp"

using namespace sparsesph;

TEST(WhittleMatern, Values) {
  const auto s = whittle_matern(1.5, 10);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 0.125);
  EXPECT_EQ(whittle_matern(1.01, 3)[0], 1.0);
  EXPECT_DOUBLE_EQ(s[3], 1.0 / 64.0);
  for (int l = 1; l <= 10; ++l) {
    EXPECT_LT(s[l], s[l - 1]);
    EXPECT_GT(s[l], 0.0);
  }
  EXPECT_THROW(whittle_matern(0.5, 10), InvalidArgument);
  EXPECT_THROW(whittle_matern(1.5, -1), InvalidArgument);
  EXPECT_DOUBLE_EQ(whittle_matern_exact(1.5, 4)[2], std::pow(7.0, -1.5));
}

TEST(PowerSpectrum, Validation) {
  EXPECT_THROW(PowerSpectrum(std::vector<double>{}), InvalidArgument);
  EXPECT_THROW(PowerSpectrum({1.0, -0.1}), InvalidArgument);
  EXPECT_THROW(PowerSpectrum({1.0, NAN}), InvalidArgument);
  const PowerSpectrum s({1.0, 2.0, 3.0});
  EXPECT_EQ(s.sum(), 6.0);
  EXPECT_EQ(s.total_power(), 1.0 + 6.0 + 15.0);
  EXPECT_EQ(s.truncated(1).values(), (std::vector<double>{1.0, 2.0}));
}

TEST(Support, Examples) {
  EXPECT_EQ(support(whittle_matern(1.5, 10), 4), (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_TRUE(support(PowerSpectrum(std::vector<double>(11, 0.0)), 10).empty());
  std::vector<double> c(6, 0.0);
  c[2] = c[5] = 1.0;
  EXPECT_EQ(support(PowerSpectrum(c), 4), (std::vector<int>{2}));
  EXPECT_THROW(support(PowerSpectrum(c), 6), InvalidArgument);
}

TEST(Support, FullSupportDimension) {
  const auto s = whittle_matern(2.0, 40);
  for (int L = 0; L <= 40; ++L) EXPECT_EQ(support_dimension(support(s, L)), (L + 1) * (L + 1));
}

TEST(SparsityBudget, Examples) {
  const auto s = whittle_matern(1.5, 100);
  EXPECT_EQ(sparsity_budget(s, 100, 0.5, SparsityKind::weak), 100);
  EXPECT_EQ(sparsity_budget(s, 10, 0.0, SparsityKind::strong), 1);
  EXPECT_EQ(sparsity_budget(s, 10, 0.5, SparsityKind::strong), 11);
  EXPECT_THROW(sparsity_budget(s, 10, 1.0, SparsityKind::weak), InvalidArgument);
  EXPECT_THROW(sparsity_budget(s, 10, -0.1, SparsityKind::weak), InvalidArgument);
}

TEST(SparsityBudget, DenseGaussianIsNeverSparse) {
  const auto s = whittle_matern(1.5, 64);
  for (int L = 8; L <= 64; L += 7)
    for (double g : {0.0, 0.3, 0.6, 0.9}) {
      const std::int64_t dense = static_cast<std::int64_t>(L + 1) * (L + 1);
      EXPECT_FALSE(is_sparse(dense, sparsity_budget(s, L, g, SparsityKind::strong))) << L << ' ' << g;
    }
}

TEST(SpectrumCsv, RoundTripIsExact) {
  const auto s = whittle_matern(1.01, 50);
  std::stringstream io;
  write_spectrum_csv(io, s);
  EXPECT_EQ(io.str().substr(0, 10), "ell,C_ell\n");
  const auto back = read_spectrum_csv(io);
  EXPECT_EQ(back, s);
}

TEST(SpectrumCsv, RejectsMalformed) {
  std::istringstream bad_header("l,C\n0,1\n");
  EXPECT_THROW(read_spectrum_csv(bad_header), IoError);
  std::istringstream gap("ell,C_ell\n0,1\n2,1\n");
  EXPECT_THROW(read_spectrum_csv(gap), IoError);
  std::istringstream junk("ell,C_ell\n0,abc\n");
  EXPECT_THROW(read_spectrum_csv(junk), IoError);
  std::istringstream negative("ell,C_ell\n0,-1\n");
  EXPECT_THROW(read_spectrum_csv(negative), IoError);
}
