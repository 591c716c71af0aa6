#pragma once
/// \file spectra.hpp
/// Angular power spectra, their supports and sparsity budgets.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sparsesph/error.hpp"

namespace sparsesph {

/// Non-negative finite sequence C_0 .. C_lmax.
class PowerSpectrum {
 public:
  PowerSpectrum() = default;

  explicit PowerSpectrum(std::vector<double> values) : c_(std::move(values)) {
    if (c_.empty()) throw InvalidArgument("PowerSpectrum: need at least C_0");
    for (double v : c_)
      if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("PowerSpectrum: values must be finite and >= 0");
  }

  int lmax() const noexcept { return static_cast<int>(c_.size()) - 1; }
  double operator[](int l) const { return c_.at(static_cast<std::size_t>(l)); }
  const std::vector<double>& values() const noexcept { return c_; }

  /// Copy restricted to l <= lmax.
  PowerSpectrum truncated(int lmax) const {
    if (lmax < 0 || lmax > this->lmax()) throw InvalidArgument("PowerSpectrum::truncated: band limit out of range");
    return PowerSpectrum(std::vector<double>(c_.begin(), c_.begin() + lmax + 1));
  }

  /// sum_l C_l.
  double sum() const noexcept {
    double s = 0.0;
    for (double v : c_) s += v;
    return s;
  }

  /// sum_l (2l+1) C_l, the variance of the field at a point times 4 pi.
  double total_power() const noexcept {
    double s = 0.0;
    for (std::size_t l = 0; l < c_.size(); ++l) s += (2.0 * static_cast<double>(l) + 1.0) * c_[l];
    return s;
  }

  bool operator==(const PowerSpectrum&) const = default;

 private:
  std::vector<double> c_;
};

/// C_l = (1 + l)^(-2 beta). beta must exceed 1/2 for sum (2l+1) C_l < inf.
inline PowerSpectrum whittle_matern(double beta, int lmax) {
  if (!(beta > 0.5)) throw InvalidArgument("whittle_matern: beta must exceed 0.5");
  if (lmax < 0) throw InvalidArgument("whittle_matern: negative band limit");
  std::vector<double> c(static_cast<std::size_t>(lmax) + 1);
  for (int l = 0; l <= lmax; ++l) c[l] = std::pow(1.0 + l, -2.0 * beta);
  return PowerSpectrum(std::move(c));
}

/// C_l = (1 + l(l+1))^(-beta), the Laplacian-eigenvalue form of the same family.
inline PowerSpectrum whittle_matern_exact(double beta, int lmax) {
  if (!(beta > 0.5)) throw InvalidArgument("whittle_matern_exact: beta must exceed 0.5");
  if (lmax < 0) throw InvalidArgument("whittle_matern_exact: negative band limit");
  std::vector<double> c(static_cast<std::size_t>(lmax) + 1);
  for (int l = 0; l <= lmax; ++l) c[l] = std::pow(1.0 + static_cast<double>(l) * (l + 1), -beta);
  return PowerSpectrum(std::move(c));
}

/// Sorted multipoles l <= L with C_l > zero_tol.
inline std::vector<int> support(const PowerSpectrum& s, int L, double zero_tol = 0.0) {
  if (L < 0 || L > s.lmax()) throw InvalidArgument("support: L must lie in [0, lmax]");
  std::vector<int> out;
  for (int l = 0; l <= L; ++l)
    if (s[l] > zero_tol) out.push_back(l);
  return out;
}

/// sum over the support of (2l+1): the number of real harmonic degrees of
/// freedom a Gaussian field with this spectrum carries up to L.
inline std::int64_t support_dimension(const std::vector<int>& supp) {
  std::int64_t d = 0;
  for (int l : supp) d += 2 * l + 1;
  return d;
}

enum class SparsityKind { weak, strong };

/// Coefficient budget at exponent gamma in [0, 1):
/// weak -> ceil(L^(2 gamma)); strong -> ceil((sum_{l in S(L)} (2l+1))^gamma).
inline std::int64_t sparsity_budget(const PowerSpectrum& s, int L, double gamma, SparsityKind kind) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("sparsity_budget: gamma must lie in [0, 1)");
  if (L < 0) throw InvalidArgument("sparsity_budget: negative L");
  double base;
  double exponent;
  if (kind == SparsityKind::weak) {
    base = static_cast<double>(L);
    exponent = 2.0 * gamma;
  } else {
    base = static_cast<double>(support_dimension(support(s, L)));
    exponent = gamma;
  }
  const double v = std::pow(base, exponent);
  // absorb pow() rounding so exact powers such as 121^0.5 stay integral
  return static_cast<std::int64_t>(std::ceil(v * (1.0 - 1e-12)));
}

/// A coefficient count is sparse at exponent gamma when it fits the budget.
inline bool is_sparse(std::int64_t coefficient_count, std::int64_t budget) noexcept {
  return coefficient_count <= budget;
}

// ---------------------------------------------------------------------------
// CSV: header "ell,C_ell", one row per l, 17 significant digits.

inline void write_spectrum_csv(std::ostream& os, const PowerSpectrum& s) {
  os << "ell,C_ell\n";
  char buf[64];
  for (int l = 0; l <= s.lmax(); ++l) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", l, s[l]);
    os << buf;
  }
}

inline PowerSpectrum read_spectrum_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("spectrum CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ell,C_ell") throw IoError("spectrum CSV: expected header 'ell,C_ell'");
  std::vector<double> c;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("spectrum CSV: malformed row '" + line + "'");
    try {
      const int l = std::stoi(line.substr(0, comma));
      const double v = std::stod(line.substr(comma + 1));
      if (l != static_cast<int>(c.size())) throw IoError("spectrum CSV: rows must list ell = 0, 1, 2, ... in order");
      c.push_back(v);
    } catch (const std::logic_error&) {
      throw IoError("spectrum CSV: malformed row '" + line + "'");
    }
  }
  if (c.empty()) throw IoError("spectrum CSV: no rows");
  try {
    return PowerSpectrum(std::move(c));
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("spectrum CSV: ") + e.what());
  }
}

}  // namespace sparsesph
