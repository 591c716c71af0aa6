#pragma once
/// \file specfun.hpp
/// Legendre polynomials, orthonormal spherical harmonics (Condon-Shortley
/// phase), exact Wigner 3j symbols, Gaunt coefficients, probabilists'
/// Hermite polynomials and an Isserlis/Wick expectation oracle.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "sparsesph/error.hpp"
#include "sparsesph/geom.hpp"

namespace sparsesph {

using cplx = std::complex<double>;

inline constexpr double kFourPi = 4.0 * std::numbers::pi;

/// Flat index of (l, m), -l <= m <= l, in a full triangular array.
constexpr std::size_t lm_index(int l, int m) noexcept {
  return static_cast<std::size_t>(l * l + l + m);
}
/// Number of (l, m) pairs with l <= lmax.
constexpr std::size_t lm_count(int lmax) noexcept {
  return static_cast<std::size_t>((lmax + 1) * (lmax + 1));
}
/// Flat index of (l, m), 0 <= m <= l, in a half triangular array.
constexpr std::size_t lm_half_index(int l, int m) noexcept {
  return static_cast<std::size_t>(l * (l + 1) / 2 + m);
}
constexpr std::size_t lm_half_count(int lmax) noexcept {
  return static_cast<std::size_t>((lmax + 1) * (lmax + 2) / 2);
}

// ---------------------------------------------------------------------------
// Legendre polynomials

namespace detail {
inline double clamp_unit(double t, const char* who) {
  if (!(std::abs(t) <= 1.0 + 1e-12)) throw InvalidArgument(std::string(who) + ": argument outside [-1, 1]");
  return std::clamp(t, -1.0, 1.0);
}
}  // namespace detail

/// P_l(t) by the upward three-term recurrence.
inline double legendre_p(int l, double t) {
  if (l < 0) throw InvalidArgument("legendre_p: negative degree");
  t = detail::clamp_unit(t, "legendre_p");
  double p0 = 1.0, p1 = t;
  if (l == 0) return 1.0;
  for (int k = 2; k <= l; ++k) {
    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// P_0(t) .. P_lmax(t) into `out` (size lmax + 1).
inline void legendre_all(int lmax, double t, std::span<double> out) {
  t = std::clamp(t, -1.0, 1.0);
  out[0] = 1.0;
  if (lmax >= 1) out[1] = t;
  for (int k = 2; k <= lmax; ++k) out[k] = ((2.0 * k - 1.0) * t * out[k - 1] - (k - 1.0) * out[k - 2]) / k;
}

/// Fully normalized associated Legendre functions
///   lambda_lm(cos th) = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(cos th),  0 <= m <= l,
/// including the Condon-Shortley phase, so Y_lm = lambda_lm e^{i m phi}.
/// Output uses lm_half_index; evaluated by the sectoral + two-term recurrences,
/// which never form the unnormalized P_l^m and stay finite at l = 256.
inline void normalized_legendre(int lmax, double cos_theta, double sin_theta, std::span<double> out) {
  out[0] = 1.0 / std::sqrt(kFourPi);
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) {
      out[lm_half_index(m, m)] =
          -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * sin_theta * out[lm_half_index(m - 1, m - 1)];
    }
    if (m + 1 <= lmax) {
      out[lm_half_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * cos_theta * out[lm_half_index(m, m)];
    }
    for (int l = m + 2; l <= lmax; ++l) {
      const double ll = static_cast<double>(l), mm = static_cast<double>(m);
      const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
      const double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) / (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
      out[lm_half_index(l, m)] = a * (cos_theta * out[lm_half_index(l - 1, m)] - b * out[lm_half_index(l - 2, m)]);
    }
  }
}

/// One order m of the table above: out[l - m] = lambda_lm for l = m..lmax.
inline void normalized_legendre_column(int lmax, int m, double cos_theta, double sin_theta, std::span<double> out) {
  double sect = 1.0 / std::sqrt(kFourPi);
  for (int k = 1; k <= m; ++k) sect *= -std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * sin_theta;
  out[0] = sect;
  if (m + 1 <= lmax) out[1] = std::sqrt(2.0 * m + 3.0) * cos_theta * sect;
  for (int l = m + 2; l <= lmax; ++l) {
    const double ll = static_cast<double>(l), mm = static_cast<double>(m);
    const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
    const double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) / (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
    out[l - m] = a * (cos_theta * out[l - m - 1] - b * out[l - m - 2]);
  }
}

// ---------------------------------------------------------------------------
// Spherical harmonics

/// All Y_lm(point), l <= lmax, at lm_index positions.
inline std::vector<cplx> sph_harm_all(int lmax, const UnitVector& p) {
  if (lmax < 0) throw InvalidArgument("sph_harm_all: negative band limit");
  std::vector<double> lam(lm_half_count(lmax));
  const double s = std::hypot(p.x(), p.y());
  normalized_legendre(lmax, p.z(), s, lam);
  std::vector<cplx> y(lm_count(lmax));
  // e^{i phi} from the Cartesian components avoids atan2 at the poles
  const cplx e1 = s > 0.0 ? cplx(p.x() / s, p.y() / s) : cplx(1.0, 0.0);
  cplx em(1.0, 0.0);
  for (int m = 0; m <= lmax; ++m) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    for (int l = m; l <= lmax; ++l) {
      const cplx v = lam[lm_half_index(l, m)] * em;
      y[lm_index(l, m)] = v;
      if (m > 0) y[lm_index(l, -m)] = sign * std::conj(v);
    }
    em *= e1;
  }
  return y;
}

/// The 2l+1 values Y_{l,-l..l}(point).
inline std::vector<cplx> sph_harm_vector(int l, const UnitVector& p) {
  if (l < 0) throw InvalidArgument("sph_harm_vector: negative degree");
  std::vector<double> lam(lm_half_count(l));
  const double s = std::hypot(p.x(), p.y());
  normalized_legendre(l, p.z(), s, lam);
  const double phi = s > 0.0 ? std::atan2(p.y(), p.x()) : 0.0;
  std::vector<cplx> y(2 * static_cast<std::size_t>(l) + 1);
  for (int m = 0; m <= l; ++m) {
    const cplx v = lam[lm_half_index(l, m)] * std::polar(1.0, m * phi);
    y[static_cast<std::size_t>(l + m)] = v;
    if (m > 0) y[static_cast<std::size_t>(l - m)] = ((m % 2 == 0) ? 1.0 : -1.0) * std::conj(v);
  }
  return y;
}

/// Orthonormal complex harmonic with Condon-Shortley phase.
inline cplx sph_harm(int l, int m, const UnitVector& p) {
  if (l < 0 || std::abs(m) > l) throw InvalidArgument("sph_harm: require l >= 0 and |m| <= l");
  return sph_harm_vector(l, p)[static_cast<std::size_t>(l + m)];
}

/// Real orthonormal basis: sqrt2 (-1)^m Re Y_lm for m > 0, sqrt2 (-1)^m Im Y_l|m|
/// for m < 0, Y_l0 for m = 0.
inline double real_sph_harm(int l, int m, const UnitVector& p) {
  if (l < 0 || std::abs(m) > l) throw InvalidArgument("real_sph_harm: require l >= 0 and |m| <= l");
  const cplx y = sph_harm(l, std::abs(m), p);
  const double sign = (std::abs(m) % 2 == 0) ? 1.0 : -1.0;
  if (m == 0) return y.real();
  if (m > 0) return std::numbers::sqrt2 * sign * y.real();
  return std::numbers::sqrt2 * sign * y.imag();
}

/// (2l+1)/(4 pi) P_l(<u, v>), the reproducing kernel of degree l.
inline double addition_kernel(int l, const UnitVector& u, const UnitVector& v) {
  return (2.0 * l + 1.0) / kFourPi * legendre_p(l, std::clamp(u.dot(v), -1.0, 1.0));
}

// ---------------------------------------------------------------------------
// Wigner 3j and Gaunt coefficients

/// Index set (l1 l2 l3; m1 m2 m3).
struct SymbolTriple {
  int l1, l2, l3;
  int m1, m2, m3;

  bool indices_valid() const noexcept {
    return l1 >= 0 && l2 >= 0 && l3 >= 0 && std::abs(m1) <= l1 && std::abs(m2) <= l2 && std::abs(m3) <= l3;
  }
  bool triangle() const noexcept { return l3 >= std::abs(l1 - l2) && l3 <= l1 + l2; }
};

inline constexpr int kWigner3jMaxL = 64;

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// Exact value of a 3j symbol as sign * sqrt(square).
struct ExactWigner3j {
  int sign = 0;            ///< -1, 0 or +1
  BigRational square = 0;  ///< (3j)^2, exact
};

namespace detail {

inline const std::vector<BigInt>& factorial_table() {
  static const std::vector<BigInt> table = [] {
    std::vector<BigInt> f(3 * kWigner3jMaxL + 2);
    f[0] = 1;
    for (std::size_t i = 1; i < f.size(); ++i) f[i] = f[i - 1] * static_cast<unsigned>(i);
    return f;
  }();
  return table;
}

inline int msb(const BigInt& v) { return v == 0 ? -1 : static_cast<int>(boost::multiprecision::msb(v)); }

/// Correctly scaled conversion of a positive rational to double.
inline double to_double(const BigRational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  if (num == 0) return 0.0;
  const bool neg = num < 0;
  if (neg) num = -num;
  const int shift = 62 - (msb(num) - msb(den));
  BigInt q = shift >= 0 ? BigInt((num << shift) / den) : BigInt(num / (den << -shift));
  const double v = std::ldexp(q.convert_to<double>(), -shift);
  return neg ? -v : v;
}

}  // namespace detail

/// True when all selection rules allow a non-zero 3j symbol.
inline bool wigner3j_allowed(const SymbolTriple& t) noexcept {
  if (!t.indices_valid() || !t.triangle()) return false;
  if (t.m1 + t.m2 + t.m3 != 0) return false;
  if (t.m1 == 0 && t.m2 == 0 && t.m3 == 0 && (t.l1 + t.l2 + t.l3) % 2 != 0) return false;
  return true;
}

/// Racah's single-sum formula evaluated in exact rational arithmetic.
inline ExactWigner3j wigner3j_exact(const SymbolTriple& t) {
  if (!t.indices_valid()) throw InvalidArgument("wigner3j: require l_i >= 0 and |m_i| <= l_i");
  if (std::max({t.l1, t.l2, t.l3}) > kWigner3jMaxL)
    throw RangeError("wigner3j: exact evaluation supports l <= " + std::to_string(kWigner3jMaxL));
  if (!wigner3j_allowed(t)) return {};
  const auto& f = detail::factorial_table();
  const int j1 = t.l1, j2 = t.l2, j3 = t.l3, m1 = t.m1, m2 = t.m2, m3 = t.m3;
  const BigInt tri_num = f[j1 + j2 - j3] * f[j1 - j2 + j3] * f[-j1 + j2 + j3];
  const BigInt tri_den = f[j1 + j2 + j3 + 1];
  const BigInt mfac = f[j1 + m1] * f[j1 - m1] * f[j2 + m2] * f[j2 - m2] * f[j3 + m3] * f[j3 - m3];

  const int kmin = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
  const int kmax = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});
  BigRational sum = 0;
  for (int k = kmin; k <= kmax; ++k) {
    const BigInt den = f[k] * f[j3 - j2 + k + m1] * f[j3 - j1 + k - m2] * f[j1 + j2 - j3 - k] * f[j1 - k - m1] *
                       f[j2 - k + m2];
    const BigRational term(BigInt(1), den);
    if (k % 2 == 0)
      sum += term;
    else
      sum -= term;
  }
  if (sum == 0) return {};
  ExactWigner3j out;
  const int phase = ((j1 - j2 - m3) % 2 == 0) ? 1 : -1;
  out.sign = phase * (sum > 0 ? 1 : -1);
  out.square = BigRational(tri_num * mfac, tri_den) * sum * sum;
  return out;
}

inline double wigner3j(const SymbolTriple& t) {
  const ExactWigner3j e = wigner3j_exact(t);
  if (e.sign == 0) return 0.0;
  return e.sign * std::sqrt(detail::to_double(e.square));
}

/// Integral of Y_{l1 m1} Y_{l2 m2} Y_{l3 m3} over the sphere:
/// sqrt((2l1+1)(2l2+1)(2l3+1)/(4 pi)) (l1 l2 l3; 0 0 0)(l1 l2 l3; m1 m2 m3).
inline double gaunt(const SymbolTriple& t) {
  if (!t.indices_valid()) throw InvalidArgument("gaunt: require l_i >= 0 and |m_i| <= l_i");
  if (t.m1 + t.m2 + t.m3 != 0 || !t.triangle() || (t.l1 + t.l2 + t.l3) % 2 != 0) {
    if (std::max({t.l1, t.l2, t.l3}) > kWigner3jMaxL)
      throw RangeError("gaunt: exact evaluation supports l <= " + std::to_string(kWigner3jMaxL));
    return 0.0;
  }
  const double zero = wigner3j({t.l1, t.l2, t.l3, 0, 0, 0});
  if (zero == 0.0) return 0.0;
  const double full = wigner3j(t);
  const double dims = (2.0 * t.l1 + 1.0) * (2.0 * t.l2 + 1.0) * (2.0 * t.l3 + 1.0);
  return std::sqrt(dims / kFourPi) * zero * full;
}

// ---------------------------------------------------------------------------
// Hermite polynomials and Wick calculus

/// Probabilists' Hermite polynomial He_k(z).
inline double hermite(int k, double z) {
  if (k < 0) throw InvalidArgument("hermite: negative degree");
  if (k == 0) return 1.0;
  double h0 = 1.0, h1 = z;
  for (int n = 1; n < k; ++n) {
    const double h2 = z * h1 - n * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// Normal-ordered product :Z_{i1} ... Z_{ik}: of jointly Gaussian variables.
/// A plain (non-ordered) factor Z_i is a monomial of degree one.
struct WickMonomial {
  std::vector<int> vars;
};

/// A real linear combination of Wick monomials.
struct WickPolynomial {
  struct Term {
    double coef;
    WickMonomial monomial;
  };
  std::vector<Term> terms;
};

inline constexpr int kWickMaxDegree = 12;

namespace detail {

/// Sum over perfect matchings of the factor positions that never pair two
/// positions of the same monomial; each matching contributes the product of
/// covariances. No validation.
inline double wick_pairings(std::span<const int> vars, std::span<const int> owner, const Eigen::MatrixXd& cov) {
  const std::size_t n = vars.size();
  if (n == 0) return 1.0;
  if (n % 2 != 0) return 0.0;
  std::uint32_t used = 0;
  // Explicit recursion on the lowest unmatched position.
  auto rec = [&](auto&& self, std::size_t first) -> double {
    while (first < n && (used >> first) & 1u) ++first;
    if (first == n) return 1.0;
    used |= 1u << first;
    double total = 0.0;
    for (std::size_t j = first + 1; j < n; ++j) {
      if ((used >> j) & 1u || owner[j] == owner[first]) continue;
      const double c = cov(vars[first], vars[j]);
      if (c == 0.0) continue;
      used |= 1u << j;
      total += c * self(self, first + 1);
      used &= ~(1u << j);
    }
    used &= ~(1u << first);
    return total;
  };
  return rec(rec, 0);
}

inline void validate_covariance(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw InvalidArgument("wick_expectation: covariance must be square");
  if (!cov.allFinite()) throw InvalidArgument("wick_expectation: covariance must be finite");
  if (cov.rows() == 0) return;
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
    throw InvalidArgument("wick_expectation: covariance must be symmetric");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-12 * scale)
    throw InvalidArgument("wick_expectation: covariance is not positive semidefinite");
}

inline double wick_expectation_unchecked(std::span<const WickMonomial> monomials, const Eigen::MatrixXd& cov) {
  std::vector<int> vars, owner;
  for (std::size_t i = 0; i < monomials.size(); ++i)
    for (int v : monomials[i].vars) {
      vars.push_back(v);
      owner.push_back(static_cast<int>(i));
    }
  return wick_pairings(vars, owner, cov);
}

}  // namespace detail

/// E[ :m_1: :m_2: ... :m_n: ] for jointly centered Gaussian variables with the
/// given covariance, by full Isserlis enumeration excluding pairings inside a
/// single monomial. Total degree is capped at kWickMaxDegree.
inline double wick_expectation(std::span<const WickMonomial> monomials, const Eigen::MatrixXd& cov) {
  detail::validate_covariance(cov);
  std::size_t degree = 0;
  for (const auto& m : monomials) {
    for (int v : m.vars)
      if (v < 0 || v >= cov.rows()) throw InvalidArgument("wick_expectation: variable index out of range");
    degree += m.vars.size();
  }
  if (degree > static_cast<std::size_t>(kWickMaxDegree))
    throw RangeError("wick_expectation: total degree exceeds the enumeration budget of " +
                     std::to_string(kWickMaxDegree));
  return detail::wick_expectation_unchecked(monomials, cov);
}

/// E[ p_1 p_2 ... p_n ] for Wick polynomials, expanded term by term.
inline double wick_product_expectation(std::span<const WickPolynomial> polys, const Eigen::MatrixXd& cov) {
  detail::validate_covariance(cov);
  std::size_t max_degree = 0;
  for (const auto& p : polys) {
    std::size_t d = 0;
    for (const auto& t : p.terms) {
      for (int v : t.monomial.vars)
        if (v < 0 || v >= cov.rows()) throw InvalidArgument("wick_product_expectation: variable index out of range");
      d = std::max(d, t.monomial.vars.size());
    }
    max_degree += d;
  }
  if (max_degree > static_cast<std::size_t>(kWickMaxDegree))
    throw RangeError("wick_product_expectation: total degree exceeds the enumeration budget");
  std::vector<WickMonomial> chosen(polys.size());
  double total = 0.0;
  auto rec = [&](auto&& self, std::size_t i, double coef) -> void {
    if (i == polys.size()) {
      total += coef * detail::wick_expectation_unchecked(chosen, cov);
      return;
    }
    for (const auto& t : polys[i].terms) {
      if (t.coef == 0.0) continue;
      chosen[i] = t.monomial;
      self(self, i + 1, coef * t.coef);
    }
  };
  rec(rec, 0, 1.0);
  return total;
}

}  // namespace sparsesph
