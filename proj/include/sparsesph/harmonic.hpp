#pragma once
/// \file harmonic.hpp
/// Harmonic coefficient arrays, grid synthesis/analysis on Gauss-Legendre
/// grids, empirical spectra, the Gaunt-projected bispectrum estimator and
/// pseudo-inverse recovery of wave weights from harmonic data.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsesph/detail/parallel.hpp"
#include "sparsesph/error.hpp"
#include "sparsesph/geom.hpp"
#include "sparsesph/rng.hpp"
#include "sparsesph/specfun.hpp"
#include "sparsesph/spectra.hpp"

namespace sparsesph {

/// a_lm for 0 <= l <= L, -l <= m <= l, stored at lm_index(l, m). The block for
/// one l is contiguous (m = -l..l), which is the vector a_l.
class HarmonicCoefficients {
 public:
  HarmonicCoefficients() : HarmonicCoefficients(0) {}
  explicit HarmonicCoefficients(int lmax) : lmax_(lmax) {
    if (lmax < 0) throw InvalidArgument("HarmonicCoefficients: negative band limit");
    a_.assign(lm_count(lmax), cplx(0.0, 0.0));
  }

  int lmax() const noexcept { return lmax_; }
  std::size_t size() const noexcept { return a_.size(); }

  cplx& operator()(int l, int m) { return a_[lm_index(l, m)]; }
  const cplx& operator()(int l, int m) const { return a_[lm_index(l, m)]; }

  std::span<cplx> ell(int l) { return {a_.data() + lm_index(l, -l), 2 * static_cast<std::size_t>(l) + 1}; }
  std::span<const cplx> ell(int l) const {
    return {a_.data() + lm_index(l, -l), 2 * static_cast<std::size_t>(l) + 1};
  }

  std::vector<cplx>& data() noexcept { return a_; }
  const std::vector<cplx>& data() const noexcept { return a_; }

  /// max_{l,m} |a_{l,-m} - (-1)^m conj(a_lm)|; zero for real fields.
  double conjugate_symmetry_defect() const noexcept {
    double d = 0.0;
    for (int l = 0; l <= lmax_; ++l)
      for (int m = 0; m <= l; ++m) {
        const double s = (m % 2 == 0) ? 1.0 : -1.0;
        d = std::max(d, std::abs((*this)(l, -m) - s * std::conj((*this)(l, m))));
      }
    return d;
  }

  double norm() const noexcept {
    double s = 0.0;
    for (const auto& v : a_) s += std::norm(v);
    return std::sqrt(s);
  }

  HarmonicCoefficients& operator+=(const HarmonicCoefficients& o) {
    if (o.lmax_ != lmax_) throw InvalidArgument("HarmonicCoefficients: band limits differ");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  HarmonicCoefficients& operator-=(const HarmonicCoefficients& o) {
    if (o.lmax_ != lmax_) throw InvalidArgument("HarmonicCoefficients: band limits differ");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  HarmonicCoefficients& operator*=(double s) {
    for (auto& v : a_) v *= s;
    return *this;
  }

 private:
  int lmax_;
  std::vector<cplx> a_;
};

/// Field samples on a SphereGrid, row-major in colatitude.
struct GridField {
  SphereGrid grid;
  std::vector<double> values;

  explicit GridField(SphereGrid g) : grid(std::move(g)), values(grid.size(), 0.0) {}
  GridField(SphereGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) throw InvalidArgument("GridField: value count does not match grid");
    for (double x : values)
      if (!std::isfinite(x)) throw InvalidArgument("GridField: non-finite value");
  }

  double& at(std::size_t i, std::size_t j) { return values[i * grid.nphi() + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * grid.nphi() + j]; }
};

/// Sum_{l,m} a_lm Y_lm(x). Costs O(L^2) per point.
inline cplx evaluate(const HarmonicCoefficients& c, const UnitVector& x) {
  const int L = c.lmax();
  const double s = std::hypot(x.x(), x.y());
  const cplx e1 = s > 0.0 ? cplx(x.x() / s, x.y() / s) : cplx(1.0, 0.0);
  std::vector<double> col(static_cast<std::size_t>(L) + 1);
  cplx em(1.0, 0.0);
  cplx total(0.0, 0.0);
  for (int m = 0; m <= L; ++m) {
    normalized_legendre_column(L, m, x.z(), s, col);
    cplx pos(0.0, 0.0), neg(0.0, 0.0);
    for (int l = m; l <= L; ++l) {
      pos += c(l, m) * col[l - m];
      if (m > 0) neg += c(l, -m) * col[l - m];
    }
    total += pos * em;
    if (m > 0) total += ((m % 2 == 0) ? 1.0 : -1.0) * neg * std::conj(em);
    em *= e1;
  }
  return total;
}

/// Sum_m a_lm Y_lm(x) for one multipole, i.e. the projection T_l(x).
inline cplx evaluate_ell(std::span<const cplx> a_l, const UnitVector& x) {
  const int l = static_cast<int>(a_l.size() / 2);
  const auto y = sph_harm_vector(l, x);
  cplx s(0.0, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) s += a_l[i] * y[i];
  return s;
}

namespace detail {
inline std::vector<cplx> phase_table(std::size_t nphi) {
  std::vector<cplx> t(nphi);
  for (std::size_t k = 0; k < nphi; ++k)
    t[k] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nphi));
  return t;
}
}  // namespace detail

/// Pointwise harmonic sum on every grid node. Rows are independent, so the
/// result does not depend on the thread count.
inline GridField synthesize(const HarmonicCoefficients& c, const SphereGrid& g) {
  if (g.lgrid() < c.lmax()) throw InvalidArgument("synthesize: grid band limit below coefficient band limit");
  const int L = c.lmax();
  const std::size_t nphi = g.nphi();
  const auto table = detail::phase_table(nphi);
  GridField out(g);
  std::vector<double> imag_residue(g.ntheta(), 0.0);
  detail::parallel_chunks(g.ntheta(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> lam(lm_half_count(L));
    std::vector<cplx> fpos(static_cast<std::size_t>(L) + 1), fneg(static_cast<std::size_t>(L) + 1);
    for (std::size_t i = begin; i < end; ++i) {
      const double ct = g.cos_theta()[i];
      const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      normalized_legendre(L, ct, st, lam);
      for (int m = 0; m <= L; ++m) {
        cplx p(0.0, 0.0), n(0.0, 0.0);
        for (int l = m; l <= L; ++l) {
          const double v = lam[lm_half_index(l, m)];
          p += c(l, m) * v;
          if (m > 0) n += c(l, -m) * v;
        }
        fpos[m] = p;
        fneg[m] = ((m % 2 == 0) ? 1.0 : -1.0) * n;
      }
      double worst = 0.0;
      for (std::size_t j = 0; j < nphi; ++j) {
        cplx v = fpos[0];
        for (int m = 1; m <= L; ++m) {
          const cplx e = table[(static_cast<std::size_t>(m) * j) % nphi];
          v += fpos[m] * e + fneg[m] * std::conj(e);
        }
        out.values[i * nphi + j] = v.real();
        worst = std::max(worst, std::abs(v.imag()));
      }
      imag_residue[i] = worst;
    }
  });
  const double worst = *std::max_element(imag_residue.begin(), imag_residue.end());
  if (worst > 1e-10 * std::max(1.0, c.norm()))
    throw InvalidArgument("synthesize: coefficients lack conjugate symmetry (imaginary residue " +
                          std::to_string(worst) + ")");
  return out;
}

/// Gauss-Legendre x longitude-DFT quadrature of f conj(Y_lm) up to the grid
/// band limit. Exact to roundoff for band-limited input; aliasing of content
/// above the band limit is the caller's responsibility. Each m is reduced over
/// rows in a fixed order, so the result does not depend on the thread count.
inline HarmonicCoefficients analyze(const GridField& f, int lmax = -1) {
  const SphereGrid& g = f.grid;
  const int L = lmax < 0 ? g.lgrid() : lmax;
  if (L > g.lgrid()) throw InvalidArgument("analyze: requested band limit exceeds grid band limit");
  const std::size_t nphi = g.nphi(), nth = g.ntheta();
  const auto table = detail::phase_table(nphi);
  const std::size_t width = static_cast<std::size_t>(L) + 1;
  // ring[i * width + m] = (2 pi / nphi) sum_j f_ij e^{-i m phi_j}
  std::vector<cplx> ring(nth * width);
  detail::parallel_chunks(nth, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      for (int m = 0; m <= L; ++m) {
        cplx s(0.0, 0.0);
        for (std::size_t j = 0; j < nphi; ++j)
          s += f.values[i * nphi + j] * std::conj(table[(static_cast<std::size_t>(m) * j) % nphi]);
        ring[i * width + m] = s * (2.0 * std::numbers::pi / static_cast<double>(nphi));
      }
  });
  HarmonicCoefficients out(L);
  detail::parallel_chunks(width, [&](std::size_t mbegin, std::size_t mend) {
    std::vector<double> col(width);
    for (std::size_t mu = mbegin; mu < mend; ++mu) {
      const int m = static_cast<int>(mu);
      for (std::size_t i = 0; i < nth; ++i) {
        const double ct = g.cos_theta()[i];
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        normalized_legendre_column(L, m, ct, st, col);
        const cplx r = ring[i * width + mu] * g.weights()[i];
        for (int l = m; l <= L; ++l) out(l, m) += r * col[l - m];
      }
      if (m > 0) {
        const double s = (m % 2 == 0) ? 1.0 : -1.0;
        for (int l = m; l <= L; ++l) out(l, -m) = s * std::conj(out(l, m));
      }
    }
  });
  return out;
}

/// C-hat_l = (2l+1)^{-1} sum_m |a_lm|^2.
inline std::vector<double> power_spectrum(const HarmonicCoefficients& c) {
  std::vector<double> out(static_cast<std::size_t>(c.lmax()) + 1, 0.0);
  for (int l = 0; l <= c.lmax(); ++l) {
    double s = 0.0;
    for (const auto& v : c.ell(l)) s += std::norm(v);
    out[l] = s / (2.0 * l + 1.0);
  }
  return out;
}

/// Isotropic Gaussian coefficients of a real field: a_l0 ~ N(0, C_l) and, for
/// m > 0, Re/Im a_lm ~ N(0, C_l / 2) with a_{l,-m} = (-1)^m conj(a_lm).
inline HarmonicCoefficients random_gaussian_coeffs(const PowerSpectrum& s, RandomStream& rng) {
  HarmonicCoefficients c(s.lmax());
  for (int l = 0; l <= s.lmax(); ++l) {
    const double sd = std::sqrt(s[l]);
    c(l, 0) = sd * rng.normal();
    for (int m = 1; m <= l; ++m) {
      const double re = rng.normal(), im = rng.normal();
      c(l, m) = cplx(re, im) * (sd / std::numbers::sqrt2);
      c(l, -m) = ((m % 2 == 0) ? 1.0 : -1.0) * std::conj(c(l, m));
    }
  }
  return c;
}

/// The same law restricted to one multipole, as the vector a_l (m = -l..l).
inline std::vector<cplx> random_gaussian_ell(int l, double variance, RandomStream& rng) {
  std::vector<double> c(static_cast<std::size_t>(l) + 1, 0.0);
  c[l] = variance;
  const auto full = random_gaussian_coeffs(PowerSpectrum(c), rng);
  const auto v = full.ell(l);
  return {v.begin(), v.end()};
}

// ---------------------------------------------------------------------------
// Bispectrum estimation from coefficient samples

struct BispectrumEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  bool degenerate = false;  ///< all Gaunt weights vanish for this triple
  std::string note;
};

/// Gaunt-weighted least-squares projection per realization,
///   b_r = sum_{m1,m2} G^{m1 m2 m3}_{l1 l2 l3} Re(a_{l1 m1} a_{l2 m2} a_{l3 m3}) / sum G^2,
/// averaged over realizations; SE = sample std / sqrt(n).
inline BispectrumEstimate map_bispectrum_estimate(std::span<const HarmonicCoefficients> samples, int l1, int l2,
                                                  int l3) {
  if (samples.empty()) throw InvalidArgument("map_bispectrum_estimate: no samples");
  if (l1 < 0 || l2 < 0 || l3 < 0) throw InvalidArgument("map_bispectrum_estimate: negative multipole");
  for (const auto& s : samples)
    if (s.lmax() < std::max({l1, l2, l3}))
      throw InvalidArgument("map_bispectrum_estimate: sample band limit below requested multipoles");
  struct Weight {
    int m1, m2, m3;
    double g;
  };
  std::vector<Weight> weights;
  double norm = 0.0;
  const SymbolTriple probe{l1, l2, l3, 0, 0, 0};
  if (probe.triangle() && (l1 + l2 + l3) % 2 == 0) {
    for (int m1 = -l1; m1 <= l1; ++m1)
      for (int m2 = -l2; m2 <= l2; ++m2) {
        const int m3 = -m1 - m2;
        if (std::abs(m3) > l3) continue;
        const double g = gaunt({l1, l2, l3, m1, m2, m3});
        if (g == 0.0) continue;
        weights.push_back({m1, m2, m3, g});
        norm += g * g;
      }
  }
  BispectrumEstimate out;
  if (weights.empty()) {
    out.degenerate = true;
    out.note = "selection rule: all Gaunt coefficients vanish (triangle or parity violated)";
    return out;
  }
  if (samples.size() < 2) throw InvalidArgument("map_bispectrum_estimate: need at least two samples");
  double mean = 0.0, m2acc = 0.0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    double proj = 0.0;
    for (const auto& w : weights) proj += w.g * (s(l1, w.m1) * s(l2, w.m2) * s(l3, w.m3)).real();
    proj /= norm;
    ++n;
    const double delta = proj - mean;
    mean += delta / static_cast<double>(n);
    m2acc += delta * (proj - mean);
  }
  out.estimate = mean;
  out.standard_error = std::sqrt(m2acc / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

// ---------------------------------------------------------------------------
// Harmonic matrices, rank and pseudo-inverse recovery

/// The (2l+1) x K matrix whose k-th column is the coefficient vector of the
/// wave (2l+1)/(4 pi) P_l(<xi_k, .>), namely conj(Y_l(xi_k)). Column norms are
/// sqrt((2l+1)/(4 pi)).
inline Eigen::MatrixXcd harmonic_matrix(int l, std::span<const UnitVector> dirs) {
  if (l < 0) throw InvalidArgument("harmonic_matrix: negative multipole");
  Eigen::MatrixXcd Y(2 * l + 1, static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const auto y = sph_harm_vector(l, dirs[k]);
    for (int i = 0; i < 2 * l + 1; ++i) Y(i, static_cast<Eigen::Index>(k)) = std::conj(y[i]);
  }
  return Y;
}

inline constexpr double kRankTolerance = 1e-10;

/// Numerical rank: singular values above 1e-10 * sigma_max.
inline int matrix_rank(int l, std::span<const UnitVector> dirs) {
  if (dirs.empty()) return 0;
  const Eigen::MatrixXcd Y = harmonic_matrix(l, dirs);
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Y);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > kRankTolerance * sv(0)) ++r;
  return r;
}

struct WeightRecovery {
  std::vector<double> weights;  ///< real parts of the least-squares solution
  double max_imag = 0.0;        ///< largest discarded imaginary part
  double residual_norm = 0.0;   ///< || Y eta - a_l || with the real weights
  double condition = 0.0;       ///< sigma_max / sigma_min
};

/// Least-squares weights eta with a_l ~= sum_k eta_k conj(Y_l(xi_k)), through
/// the SVD pseudo-inverse. Throws RankDeficient when sigma_min < 1e-10 sigma_max.
inline WeightRecovery recover_weights(std::span<const cplx> a_l, std::span<const UnitVector> dirs) {
  if (a_l.size() % 2 != 1) throw InvalidArgument("recover_weights: a_l must have odd length 2l+1");
  const int l = static_cast<int>(a_l.size() / 2);
  if (dirs.empty()) throw InvalidArgument("recover_weights: need at least one direction");
  if (dirs.size() > a_l.size()) throw RankDeficient("recover_weights: K exceeds 2l+1, columns are dependent");
  const Eigen::MatrixXcd Y = harmonic_matrix(l, dirs);
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(sv.size() - 1);
  if (!(smin >= kRankTolerance * smax))
    throw RankDeficient("recover_weights: harmonic matrix is numerically rank deficient");
  Eigen::VectorXcd a(static_cast<Eigen::Index>(a_l.size()));
  for (std::size_t i = 0; i < a_l.size(); ++i) a(static_cast<Eigen::Index>(i)) = a_l[i];
  const Eigen::VectorXcd eta = svd.solve(a);
  WeightRecovery out;
  out.condition = smax / smin;
  out.weights.resize(dirs.size());
  Eigen::VectorXcd eta_real(eta.size());
  for (Eigen::Index k = 0; k < eta.size(); ++k) {
    out.weights[static_cast<std::size_t>(k)] = eta(k).real();
    out.max_imag = std::max(out.max_imag, std::abs(eta(k).imag()));
    eta_real(k) = eta(k).real();
  }
  out.residual_norm = (Y * eta_real - a).norm();
  return out;
}

}  // namespace sparsesph
