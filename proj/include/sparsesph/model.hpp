#pragma once
/// \file model.hpp
/// Sparse superpositions of Legendre waves
///
///   T(x) = sum_l sum_k eta_lk (2l+1)/(4 pi) P_l(<xi_k, x>),
///
/// their weight generators (i.i.d., local f_NL, general quadratic Wick),
/// pointwise and grid synthesis, exact harmonic coefficients and empirical
/// spectra, and the reduced-bispectrum closed form, Isserlis oracle and Monte
/// Carlo estimator.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsesph/detail/parallel.hpp"
#include "sparsesph/error.hpp"
#include "sparsesph/geom.hpp"
#include "sparsesph/harmonic.hpp"
#include "sparsesph/rng.hpp"
#include "sparsesph/specfun.hpp"
#include "sparsesph/spectra.hpp"

namespace sparsesph {

/// Where a field came from; carried into files unchanged.
struct Provenance {
  std::string generator = "manual";
  std::string spectrum_model;
  std::map<std::string, double> parameters;
  std::uint64_t seed = 0;

  bool operator==(const Provenance&) const = default;
};

/// Directions xi_k and real weights eta_lk. In the shared layout a single list
/// of K directions serves every multipole; in the ragged layout each l has its
/// own list of K_l directions.
class SparseField {
 public:
  SparseField() = default;

  /// Shared layout: weights[l][k], k < directions.size().
  static SparseField shared(std::vector<UnitVector> directions, std::vector<std::vector<double>> weights,
                            Provenance prov = {}) {
    SparseField f;
    f.shared_ = true;
    f.shared_dirs_ = std::move(directions);
    f.weights_ = std::move(weights);
    f.provenance_ = std::move(prov);
    f.validate();
    return f;
  }

  /// Ragged layout: directions[l] and weights[l] of equal length K_l.
  static SparseField ragged(std::vector<std::vector<UnitVector>> directions,
                            std::vector<std::vector<double>> weights, Provenance prov = {}) {
    SparseField f;
    f.shared_ = false;
    f.ragged_dirs_ = std::move(directions);
    f.weights_ = std::move(weights);
    f.provenance_ = std::move(prov);
    f.validate();
    return f;
  }

  int lmax() const noexcept { return static_cast<int>(weights_.size()) - 1; }
  bool shared_directions() const noexcept { return shared_; }
  std::size_t K(int l) const { return weights_.at(static_cast<std::size_t>(l)).size(); }

  /// Shared layout only: the common direction list.
  const std::vector<UnitVector>& directions() const {
    if (!shared_) throw InvalidArgument("SparseField: ragged layout has no shared direction list");
    return shared_dirs_;
  }
  std::span<const UnitVector> directions(int l) const {
    if (shared_) return shared_dirs_;
    return ragged_dirs_.at(static_cast<std::size_t>(l));
  }
  const std::vector<std::vector<UnitVector>>& ragged_directions() const noexcept { return ragged_dirs_; }

  double weight(int l, std::size_t k) const { return weights_.at(static_cast<std::size_t>(l)).at(k); }
  const std::vector<std::vector<double>>& weights() const noexcept { return weights_; }

  const Provenance& provenance() const noexcept { return provenance_; }
  Provenance& provenance() noexcept { return provenance_; }

  /// Real weights actually stored: sum_l K_l.
  std::int64_t weight_count() const noexcept {
    std::int64_t n = 0;
    for (const auto& w : weights_) n += static_cast<std::int64_t>(w.size());
    return n;
  }
  /// Number of direction slots: K for the shared layout, sum_l K_l otherwise.
  std::int64_t direction_count() const noexcept {
    if (shared_) return static_cast<std::int64_t>(shared_dirs_.size());
    std::int64_t n = 0;
    for (const auto& d : ragged_dirs_) n += static_cast<std::int64_t>(d.size());
    return n;
  }
  /// Direction slots plus weights, e.g. K + K (L+1) for the shared layout.
  std::int64_t parameter_count() const noexcept { return direction_count() + weight_count(); }
  /// Real coefficients of a dense harmonic representation, (L+1)^2.
  std::int64_t dense_coefficient_count() const noexcept {
    return static_cast<std::int64_t>(lmax() + 1) * (lmax() + 1);
  }

  /// The same field with every direction replaced by R xi.
  SparseField rotated(const Rotation& r) const {
    SparseField f = *this;
    for (auto& d : f.shared_dirs_) d = rotate(r, d);
    for (auto& list : f.ragged_dirs_)
      for (auto& d : list) d = rotate(r, d);
    return f;
  }

  bool operator==(const SparseField&) const = default;

 private:
  void validate() const {
    if (weights_.empty()) throw InvalidArgument("SparseField: need weights for l = 0 at least");
    if (shared_) {
      for (const auto& w : weights_)
        if (w.size() != shared_dirs_.size())
          throw InvalidArgument("SparseField: weight rows must match the shared direction count");
    } else {
      if (ragged_dirs_.size() != weights_.size())
        throw InvalidArgument("SparseField: ragged directions need one list per multipole");
      for (std::size_t l = 0; l < weights_.size(); ++l)
        if (ragged_dirs_[l].size() != weights_[l].size())
          throw InvalidArgument("SparseField: direction and weight counts differ at l = " + std::to_string(l));
    }
    for (const auto& w : weights_)
      for (double v : w)
        if (!std::isfinite(v)) throw InvalidArgument("SparseField: non-finite weight");
  }

  bool shared_ = true;
  std::vector<UnitVector> shared_dirs_;
  std::vector<std::vector<UnitVector>> ragged_dirs_;
  std::vector<std::vector<double>> weights_;
  Provenance provenance_;
};

// ---------------------------------------------------------------------------
// Weight generators. Stream order: directions first, then weights by
// ascending l, then k.

enum class WeightDistribution { gaussian, rademacher };

inline const char* to_string(WeightDistribution d) noexcept {
  return d == WeightDistribution::gaussian ? "iid-gaussian" : "iid-rademacher";
}

/// eta_lk = u_lk sqrt(4 pi C_l / K) with i.i.d. unit-variance u, independent
/// of K shared uniform directions.
inline SparseField gen_iid_weights(const PowerSpectrum& s, int K, WeightDistribution dist, RandomStream& rng) {
  if (K < 1) throw InvalidArgument("gen_iid_weights: K must be at least 1");
  std::vector<UnitVector> dirs;
  dirs.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) dirs.push_back(sample_uniform(rng));
  std::vector<std::vector<double>> w(static_cast<std::size_t>(s.lmax()) + 1,
                                     std::vector<double>(static_cast<std::size_t>(K)));
  for (int l = 0; l <= s.lmax(); ++l) {
    const double sd = std::sqrt(kFourPi * s[l] / K);
    for (int k = 0; k < K; ++k) {
      const double u = dist == WeightDistribution::gaussian ? rng.normal() : rng.rademacher();
      w[l][k] = sd == 0.0 ? 0.0 : sd * u;
    }
  }
  Provenance p;
  p.generator = to_string(dist);
  p.parameters["K"] = K;
  p.seed = rng.seed();
  return SparseField::shared(std::move(dirs), std::move(w), std::move(p));
}

/// Quadratic Wick coefficients c^l_{l1 l2}, symmetrized in (l1, l2). When the
/// coefficients factor as alpha_l u_{l1} u_{l2} the double Wick sum is
/// evaluated in closed form alpha_l ((sum u z)^2 - sum u^2).
struct QuadraticCoefficients {
  std::function<double(int, int, int)> coefficient;
  struct Separable {
    std::vector<double> alpha;  ///< per output multipole l
    std::vector<double> u;      ///< per input multipole l1
  };
  std::optional<Separable> separable;
  std::string name = "custom";
  std::map<std::string, double> parameters;

  double operator()(int l, int l1, int l2) const {
    if (separable) return separable->alpha.at(l) * separable->u.at(l1) * separable->u.at(l2);
    return 0.5 * (coefficient(l, l1, l2) + coefficient(l, l2, l1));
  }

  /// c^l_{l1 l2} = 3 f_NL sqrt(C_l1 C_l2), the local f_NL model.
  static QuadraticCoefficients fnl(const PowerSpectrum& s, double fnl) {
    QuadraticCoefficients c;
    Separable sep;
    sep.alpha.assign(static_cast<std::size_t>(s.lmax()) + 1, 3.0 * fnl);
    sep.u.resize(static_cast<std::size_t>(s.lmax()) + 1);
    for (int l = 0; l <= s.lmax(); ++l) sep.u[l] = std::sqrt(s[l]);
    c.separable = std::move(sep);
    c.name = "fnl";
    c.parameters["f_NL"] = fnl;
    return c;
  }

  /// c^l_{l1 l2} = sqrt(C_l) / (1 + |l1 - l2|)^gamma_c, concentrated near l1 = l2.
  static QuadraticCoefficients decaying(const PowerSpectrum& s, double gamma_c) {
    QuadraticCoefficients c;
    std::vector<double> root(static_cast<std::size_t>(s.lmax()) + 1);
    for (int l = 0; l <= s.lmax(); ++l) root[l] = std::sqrt(s[l]);
    c.coefficient = [root, gamma_c](int l, int l1, int l2) {
      return root.at(l) / std::pow(1.0 + std::abs(l1 - l2), gamma_c);
    };
    c.name = "decaying";
    c.parameters["gamma_c"] = gamma_c;
    return c;
  }

  static QuadraticCoefficients from_function(std::function<double(int, int, int)> fn) {
    QuadraticCoefficients c;
    c.coefficient = std::move(fn);
    return c;
  }

  static QuadraticCoefficients zero() {
    return from_function([](int, int, int) { return 0.0; });
  }
};

/// eta_l = sqrt(4 pi C_l) z_l + sum_{l1,l2 <= L} c^l_{l1 l2} :z_l1 z_l2: for given
/// standard normals z; :z_a z_b: = z_a z_b - delta_ab for independent z.
inline std::vector<double> quadratic_weights_from_normals(const PowerSpectrum& s, const QuadraticCoefficients& c,
                                                          std::span<const double> z) {
  const int L = s.lmax();
  if (z.size() != static_cast<std::size_t>(L) + 1) throw InvalidArgument("quadratic weights: need one z per multipole");
  std::vector<double> eta(static_cast<std::size_t>(L) + 1);
  if (c.separable) {
    double lin = 0.0, var = 0.0;
    for (int l = 0; l <= L; ++l) {
      lin += c.separable->u.at(l) * z[l];
      var += c.separable->u.at(l) * c.separable->u.at(l);
    }
    const double wick = lin * lin - var;
    for (int l = 0; l <= L; ++l) eta[l] = std::sqrt(kFourPi * s[l]) * z[l] + c.separable->alpha.at(l) * wick;
    return eta;
  }
  for (int l = 0; l <= L; ++l) {
    double q = 0.0;
    for (int a = 0; a <= L; ++a)
      for (int b = 0; b <= L; ++b) q += c(l, a, b) * (z[a] * z[b] - (a == b ? 1.0 : 0.0));
    eta[l] = std::sqrt(kFourPi * s[l]) * z[l] + q;
  }
  return eta;
}

/// K = 1 field with quadratic-order Wick weights and one uniform direction.
inline SparseField gen_general_quadratic_weights(const PowerSpectrum& s, const QuadraticCoefficients& c,
                                                 RandomStream& rng) {
  const UnitVector dir = sample_uniform(rng);
  std::vector<double> z(static_cast<std::size_t>(s.lmax()) + 1);
  for (auto& v : z) v = rng.normal();
  const auto eta = quadratic_weights_from_normals(s, c, z);
  std::vector<std::vector<double>> w(eta.size());
  for (std::size_t l = 0; l < eta.size(); ++l) w[l] = {eta[l]};
  Provenance p;
  p.generator = c.name == "fnl" ? "fnl" : "general-quadratic";
  p.parameters = c.parameters;
  p.parameters["K"] = 1;
  p.seed = rng.seed();
  return SparseField::shared({dir}, std::move(w), std::move(p));
}

/// Local f_NL weights eta_l = sqrt(4 pi C_l) z_l + 3 f_NL sum sqrt(C_l1 C_l2) :z_l1 z_l2:,
/// with the double sum over 0 <= l1, l2 <= lmax in its O(L) closed form.
inline SparseField gen_fnl_weights(const PowerSpectrum& s, double fnl, RandomStream& rng) {
  return gen_general_quadratic_weights(s, QuadraticCoefficients::fnl(s, fnl), rng);
}

/// Generator choice with its parameters.
struct WeightSpec {
  enum class Kind { iid_gaussian, iid_rademacher, fnl, general_quadratic };
  Kind kind = Kind::iid_gaussian;
  int K = 1;
  double fnl = 0.0;
  std::optional<QuadraticCoefficients> coefficients;  ///< general_quadratic only
};

inline SparseField generate_weights(const WeightSpec& spec, const PowerSpectrum& s, RandomStream& rng) {
  switch (spec.kind) {
    case WeightSpec::Kind::iid_gaussian:
      return gen_iid_weights(s, spec.K, WeightDistribution::gaussian, rng);
    case WeightSpec::Kind::iid_rademacher:
      return gen_iid_weights(s, spec.K, WeightDistribution::rademacher, rng);
    case WeightSpec::Kind::fnl:
      return gen_fnl_weights(s, spec.fnl, rng);
    case WeightSpec::Kind::general_quadratic:
      if (!spec.coefficients) throw InvalidArgument("generate_weights: general-quadratic needs coefficients");
      return gen_general_quadratic_weights(s, *spec.coefficients, rng);
  }
  throw InvalidArgument("generate_weights: unknown variant");
}

// ---------------------------------------------------------------------------
// Synthesis, coefficients, spectra

/// T(x); shares one Legendre recurrence per direction across all l.
inline double synthesize_at(const SparseField& f, const UnitVector& x) {
  const int L = f.lmax();
  std::vector<double> p(static_cast<std::size_t>(L) + 1);
  double total = 0.0;
  if (f.shared_directions()) {
    const auto& dirs = f.directions();
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      legendre_all(L, dirs[k].dot(x), p);
      for (int l = 0; l <= L; ++l) total += f.weight(l, k) * (2.0 * l + 1.0) / kFourPi * p[l];
    }
    return total;
  }
  for (int l = 0; l <= L; ++l) {
    const auto dirs = f.directions(l);
    for (std::size_t k = 0; k < dirs.size(); ++k) total += f.weight(l, k) * addition_kernel(l, dirs[k], x);
  }
  return total;
}

/// Exact a_lm = sum_k eta_lk conj(Y_lm(xi_k)), no quadrature.
inline HarmonicCoefficients harmonic_coeffs(const SparseField& f) {
  const int L = f.lmax();
  HarmonicCoefficients c(L);
  if (f.shared_directions()) {
    const auto& dirs = f.directions();
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      const auto y = sph_harm_all(L, dirs[k]);
      for (int l = 0; l <= L; ++l) {
        const double w = f.weight(l, k);
        if (w == 0.0) continue;
        for (int m = -l; m <= l; ++m) c(l, m) += w * std::conj(y[lm_index(l, m)]);
      }
    }
    return c;
  }
  for (int l = 0; l <= L; ++l) {
    const auto dirs = f.directions(l);
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      const auto y = sph_harm_vector(l, dirs[k]);
      for (int m = -l; m <= l; ++m) c(l, m) += f.weight(l, k) * std::conj(y[static_cast<std::size_t>(l + m)]);
    }
  }
  return c;
}

/// Grid samples through the exact coefficients; needs grid.lgrid() >= lmax.
inline GridField synthesize_grid(const SparseField& f, const SphereGrid& g) {
  return synthesize(harmonic_coeffs(f), g);
}

/// C-hat_l = (2l+1)^{-1} sum_{h,k} eta_lk eta_lh Y_l(xi_k)^T conj(Y_l(xi_h))
///         = (4 pi)^{-1} sum_{h,k} eta_lk eta_lh P_l(<xi_k, xi_h>).
/// Diagonal terms use P_l(1) = 1 exactly, so K = 1 gives eta_l^2 / (4 pi).
inline std::vector<double> exact_empirical_spectrum(const SparseField& f) {
  const int L = f.lmax();
  std::vector<double> out(static_cast<std::size_t>(L) + 1, 0.0);
  if (f.shared_directions()) {
    const auto& dirs = f.directions();
    const std::size_t K = dirs.size();
    std::vector<double> p(static_cast<std::size_t>(L) + 1);
    for (std::size_t k = 0; k < K; ++k) {
      for (int l = 0; l <= L; ++l) out[l] += f.weight(l, k) * f.weight(l, k);
      for (std::size_t h = k + 1; h < K; ++h) {
        legendre_all(L, dirs[k].dot(dirs[h]), p);
        for (int l = 0; l <= L; ++l) out[l] += 2.0 * f.weight(l, k) * f.weight(l, h) * p[l];
      }
    }
  } else {
    for (int l = 0; l <= L; ++l) {
      const auto dirs = f.directions(l);
      for (std::size_t k = 0; k < dirs.size(); ++k) {
        out[l] += f.weight(l, k) * f.weight(l, k);
        for (std::size_t h = k + 1; h < dirs.size(); ++h)
          out[l] += 2.0 * f.weight(l, k) * f.weight(l, h) * legendre_p(l, std::clamp(dirs[k].dot(dirs[h]), -1.0, 1.0));
      }
    }
  }
  for (auto& v : out) v /= kFourPi;
  return out;
}

// ---------------------------------------------------------------------------
// Bispectrum of the f_NL model

namespace detail {

/// eta_l as a Wick polynomial in z_0..z_L (variable index = multipole), with
/// each unordered pair {a, b} collected once.
inline WickPolynomial quadratic_weight_polynomial(const PowerSpectrum& s, const QuadraticCoefficients& c, int l) {
  const int L = s.lmax();
  WickPolynomial p;
  p.terms.push_back({std::sqrt(kFourPi * s[l]), WickMonomial{{l}}});
  for (int a = 0; a <= L; ++a)
    for (int b = a; b <= L; ++b) {
      const double coef = a == b ? c(l, a, a) : c(l, a, b) + c(l, b, a);
      if (coef != 0.0) p.terms.push_back({coef, WickMonomial{{a, b}}});
    }
  return p;
}

}  // namespace detail

/// (4 pi)^{-1} E[eta_l1 eta_l2 eta_l3] by Isserlis enumeration over the Wick
/// expansion of the quadratic weights. Cost grows like L^6; intended for the
/// small band limits used to validate closed forms.
inline double reduced_bispectrum_oracle(const PowerSpectrum& s, const QuadraticCoefficients& c, int l1, int l2,
                                        int l3) {
  const int L = s.lmax();
  if (std::min({l1, l2, l3}) < 0 || std::max({l1, l2, l3}) > L)
    throw InvalidArgument("reduced_bispectrum_oracle: multipole out of range");
  const std::vector<WickPolynomial> polys{detail::quadratic_weight_polynomial(s, c, l1),
                                          detail::quadratic_weight_polynomial(s, c, l2),
                                          detail::quadratic_weight_polynomial(s, c, l3)};
  const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(L + 1, L + 1);
  return wick_product_expectation(polys, cov) / kFourPi;
}

/// E[eta_l eta_l'] by the same oracle; (4 pi)^{-1} times this is the model's
/// E[a_lm conj(a_l'm)] for K = 1.
inline double weight_covariance_oracle(const PowerSpectrum& s, const QuadraticCoefficients& c, int l, int lp) {
  const std::vector<WickPolynomial> polys{detail::quadratic_weight_polynomial(s, c, l),
                                          detail::quadratic_weight_polynomial(s, c, lp)};
  const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(s.lmax() + 1, s.lmax() + 1);
  return wick_product_expectation(polys, cov);
}

struct BispectrumFormula {
  double value = 0.0;        ///< closed form: first_order + cubic
  double first_order = 0.0;  ///< 6 f (C1 C2 + C2 C3 + C3 C1)
  double cubic = 0.0;        ///< 54 f^3 (sum_l C_l)^3 / pi
  std::optional<double> oracle;  ///< Isserlis value when requested
  bool agrees_with_oracle = true;
};

/// Closed-form reduced bispectrum of the local f_NL weights:
///   b = 6 f (C1 C2 + C2 C3 + C3 C1) + (54 f^3 / pi) (sum_l C_l)^3.
/// With `with_oracle` the Isserlis value is attached and compared at 1e-12 relative.
inline BispectrumFormula reduced_bispectrum_formula(const PowerSpectrum& s, double fnl, int l1, int l2, int l3,
                                                    bool with_oracle = false) {
  if (std::min({l1, l2, l3}) < 0 || std::max({l1, l2, l3}) > s.lmax())
    throw InvalidArgument("reduced_bispectrum_formula: multipole out of range");
  BispectrumFormula out;
  out.first_order = 6.0 * fnl * (s[l1] * s[l2] + s[l2] * s[l3] + s[l3] * s[l1]);
  const double total = s.sum();
  out.cubic = 54.0 * fnl * fnl * fnl / std::numbers::pi * total * total * total;
  out.value = out.first_order + out.cubic;
  if (with_oracle) {
    out.oracle = reduced_bispectrum_oracle(s, QuadraticCoefficients::fnl(s, fnl), l1, l2, l3);
    const double scale = std::max({std::abs(out.value), std::abs(*out.oracle), 1e-300});
    out.agrees_with_oracle = std::abs(out.value - *out.oracle) <= 1e-12 * scale;
  }
  return out;
}

/// Sample mean with its standard error.
struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

namespace detail {

/// Neumaier-compensated sum in index order.
inline double compensated_sum(std::span<const double> v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

inline McEstimate mean_and_se(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = compensated_sum(v) / n;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  const double var = compensated_sum(sq) / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace detail

/// (4 pi)^{-1} eta_l1 eta_l2 eta_l3 averaged over M draws of the f_NL weights,
/// for several triples at once. Draw r uses rng.split(r), so the result does
/// not depend on thread count or scheduling.
inline std::vector<McEstimate> mc_reduced_bispectrum_many(const PowerSpectrum& s, double fnl,
                                                          std::span<const std::array<int, 3>> triples, int M,
                                                          const RandomStream& rng) {
  if (M < 2) throw InvalidArgument("mc_reduced_bispectrum: M must be at least 2");
  for (const auto& t : triples)
    if (std::min({t[0], t[1], t[2]}) < 0 || std::max({t[0], t[1], t[2]}) > s.lmax())
      throw InvalidArgument("mc_reduced_bispectrum: multipole out of range");
  const auto coeffs = QuadraticCoefficients::fnl(s, fnl);
  const std::size_t nt = triples.size();
  std::vector<std::vector<double>> samples(nt, std::vector<double>(static_cast<std::size_t>(M)));
  detail::parallel_chunks(static_cast<std::size_t>(M), [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      RandomStream stream = rng.split(r);
      const SparseField f = gen_general_quadratic_weights(s, coeffs, stream);
      for (std::size_t t = 0; t < nt; ++t) {
        const auto& tr = triples[t];
        samples[t][r] = f.weight(tr[0], 0) * f.weight(tr[1], 0) * f.weight(tr[2], 0) / kFourPi;
      }
    }
  });
  std::vector<McEstimate> out(nt);
  for (std::size_t t = 0; t < nt; ++t) out[t] = detail::mean_and_se(samples[t]);
  return out;
}

inline McEstimate mc_reduced_bispectrum(const PowerSpectrum& s, double fnl, int l1, int l2, int l3, int M,
                                        const RandomStream& rng) {
  const std::array<std::array<int, 3>, 1> t{{{l1, l2, l3}}};
  return mc_reduced_bispectrum_many(s, fnl, t, M, rng)[0];
}

}  // namespace sparsesph
