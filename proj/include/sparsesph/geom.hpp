#pragma once
/// \file geom.hpp
/// Points on the unit sphere, rotations, uniform sampling, Gauss-Legendre
/// product grids and Fibonacci search lattices.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "sparsesph/error.hpp"
#include "sparsesph/rng.hpp"

namespace sparsesph {

/// A point on S^2. Construction normalizes, so the invariant |v| = 1 holds
/// up to one rounding of each component.
class UnitVector {
 public:
  UnitVector() noexcept : x_(0.0), y_(0.0), z_(1.0) {}

  /// Normalizes (x, y, z); throws on the zero vector or non-finite input.
  UnitVector(double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("UnitVector: zero or non-finite vector");
    x_ = x / n;
    y_ = y / n;
    z_ = z / n;
  }

  /// Stores (x, y, z) bit-for-bit; the norm must already be 1 within 1e-12.
  static UnitVector from_unit_components(double x, double y, double z) {
    const double n2 = x * x + y * y + z * z;
    if (!std::isfinite(n2) || std::abs(n2 - 1.0) > 1e-12)
      throw InvalidArgument("UnitVector: components do not have unit norm");
    UnitVector v;
    v.x_ = x;
    v.y_ = y;
    v.z_ = z;
    return v;
  }

  static UnitVector from_angles(double theta, double phi) {
    const double s = std::sin(theta);
    return UnitVector(s * std::cos(phi), s * std::sin(phi), std::cos(theta));
  }

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double z() const noexcept { return z_; }
  std::array<double, 3> array() const noexcept { return {x_, y_, z_}; }

  /// Colatitude in [0, pi].
  double theta() const noexcept { return std::atan2(std::hypot(x_, y_), z_); }
  /// Longitude in (-pi, pi].
  double phi() const noexcept { return std::atan2(y_, x_); }

  double dot(const UnitVector& o) const noexcept { return x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }

  /// Great-circle distance in radians.
  double angle_to(const UnitVector& o) const noexcept {
    const double cx = y_ * o.z_ - z_ * o.y_;
    const double cy = z_ * o.x_ - x_ * o.z_;
    const double cz = x_ * o.y_ - y_ * o.x_;
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot(o));
  }

  bool operator==(const UnitVector&) const = default;

 private:
  double x_, y_, z_;
};

/// Proper rotation of R^3, stored row-major.
class Rotation {
 public:
  using Matrix = std::array<std::array<double, 3>, 3>;

  Rotation() noexcept : m_{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}} {}

  /// Validates orthonormality and det = +1 to 1e-12.
  explicit Rotation(const Matrix& m) : m_(m) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += m_[k][i] * m_[k][j];
        if (std::abs(s - (i == j ? 1.0 : 0.0)) > 1e-12) throw InvalidArgument("Rotation: columns not orthonormal");
      }
    if (std::abs(determinant() - 1.0) > 1e-12) throw InvalidArgument("Rotation: determinant is not +1");
  }

  /// Right-handed rotation by `angle` about `axis`.
  static Rotation axis_angle(const UnitVector& axis, double angle) {
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    const double x = axis.x(), y = axis.y(), z = axis.z();
    Rotation r;
    r.m_ = {{{t * x * x + c, t * x * y - s * z, t * x * z + s * y},
             {t * x * y + s * z, t * y * y + c, t * y * z - s * x},
             {t * x * z - s * y, t * y * z + s * x, t * z * z + c}}};
    return r;
  }

  /// Haar-uniform rotation from a normalized Gaussian quaternion.
  static Rotation random(RandomStream& rng) {
    double w, x, y, z, n;
    do {
      w = rng.normal();
      x = rng.normal();
      y = rng.normal();
      z = rng.normal();
      n = std::sqrt(w * w + x * x + y * y + z * z);
    } while (!(n > 1e-300));
    w /= n;
    x /= n;
    y /= n;
    z /= n;
    Rotation r;
    r.m_ = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
             {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
             {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
    return r;
  }

  const Matrix& matrix() const noexcept { return m_; }

  double determinant() const noexcept {
    return m_[0][0] * (m_[1][1] * m_[2][2] - m_[1][2] * m_[2][1]) -
           m_[0][1] * (m_[1][0] * m_[2][2] - m_[1][2] * m_[2][0]) +
           m_[0][2] * (m_[1][0] * m_[2][1] - m_[1][1] * m_[2][0]);
  }

  Rotation inverse() const noexcept {
    Rotation r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m_[i][j] = m_[j][i];
    return r;
  }

  Rotation operator*(const Rotation& o) const noexcept {
    Rotation r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += m_[i][k] * o.m_[k][j];
        r.m_[i][j] = s;
      }
    return r;
  }

  /// Raw product without renormalization.
  std::array<double, 3> apply(const std::array<double, 3>& v) const noexcept {
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) out[i] = m_[i][0] * v[0] + m_[i][1] * v[1] + m_[i][2] * v[2];
    return out;
  }

 private:
  Matrix m_;
};

inline UnitVector rotate(const Rotation& r, const UnitVector& v) {
  const auto w = r.apply(v.array());
  return UnitVector(w[0], w[1], w[2]);
}

/// Uniform point on S^2: a normalized triple of independent standard normals.
inline UnitVector sample_uniform(RandomStream& rng) {
  for (;;) {
    const double x = rng.normal(), y = rng.normal(), z = rng.normal();
    const double n2 = x * x + y * y + z * z;
    if (n2 > 1e-300) return UnitVector(x, y, z);
  }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;    ///< descending (colatitude ascending)
  std::vector<double> weights;  ///< positive, summing to 2
};

/// n-point rule by Newton iteration on P_n from Chebyshev-type initial guesses.
inline GaussLegendre gauss_legendre(std::size_t n) {
  if (n == 0) throw InvalidArgument("gauss_legendre: need at least one node");
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // (P_n(x), P_n'(x)) by the three-term recurrence
  const auto legendre_with_derivative = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = p2;
    }
    return std::array<double, 2>{p1, static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0)};
  };
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre_with_derivative(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre_with_derivative(x)[1];
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = x;
    rule.nodes[n - 1 - i] = -x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Gauss-Legendre colatitudes times equispaced longitudes, exact for
/// products of two band-L functions when ntheta = L+1 and nphi >= 2L+1.
class SphereGrid {
 public:
  /// Minimal grid for band limit `lgrid` unless a larger `nphi` is given.
  explicit SphereGrid(int lgrid, std::size_t nphi = 0) : lgrid_(lgrid) {
    if (lgrid < 0) throw InvalidArgument("SphereGrid: band limit must be non-negative");
    const std::size_t min_phi = 2 * static_cast<std::size_t>(lgrid) + 1;
    nphi_ = nphi == 0 ? min_phi : nphi;
    if (nphi_ < min_phi) throw InvalidArgument("SphereGrid: nphi must be at least 2L+1");
    rule_ = gauss_legendre(static_cast<std::size_t>(lgrid) + 1);
  }

  int lgrid() const noexcept { return lgrid_; }
  std::size_t ntheta() const noexcept { return rule_.nodes.size(); }
  std::size_t nphi() const noexcept { return nphi_; }
  std::size_t size() const noexcept { return ntheta() * nphi_; }

  const std::vector<double>& cos_theta() const noexcept { return rule_.nodes; }
  const std::vector<double>& weights() const noexcept { return rule_.weights; }

  double phi(std::size_t j) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(nphi_);
  }

  /// Quadrature weight of node (i, j) for the measure of total mass 4 pi.
  double area_weight(std::size_t i) const noexcept {
    return rule_.weights[i] * 2.0 * std::numbers::pi / static_cast<double>(nphi_);
  }

  UnitVector point(std::size_t i, std::size_t j) const {
    const double c = rule_.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double p = phi(j);
    return UnitVector(s * std::cos(p), s * std::sin(p), c);
  }

 private:
  int lgrid_;
  std::size_t nphi_;
  GaussLegendre rule_;
};

inline SphereGrid gauss_legendre_grid(int lgrid) { return SphereGrid(lgrid); }

/// Golden-angle lattice: z_i = 1 - 2(i + 1/2)/M, phi_i = i * pi (3 - sqrt 5).
inline std::vector<UnitVector> fibonacci_lattice(std::size_t count) {
  if (count < 1) throw InvalidArgument("fibonacci_lattice: need at least one point");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<UnitVector> pts;
  pts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double p = golden * static_cast<double>(i);
    pts.emplace_back(r * std::cos(p), r * std::sin(p), z);
  }
  return pts;
}

/// Typical nearest-neighbour spacing of an M-point quasi-uniform lattice.
inline double lattice_spacing(std::size_t count) {
  return std::sqrt(4.0 * std::numbers::pi / static_cast<double>(count));
}

}  // namespace sparsesph
