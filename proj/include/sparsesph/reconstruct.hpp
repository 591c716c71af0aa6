#pragma once
/// \file reconstruct.hpp
/// Greedy sparse reconstruction: monochromatic matching pursuit with exact
/// projection updates, and the polychromatic loop driven by the projection
/// index. Directions are found by a Fibonacci-lattice scan followed by a
/// shrinking-ring local search.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sparsesph/detail/parallel.hpp"
#include "sparsesph/error.hpp"
#include "sparsesph/geom.hpp"
#include "sparsesph/harmonic.hpp"
#include "sparsesph/model.hpp"
#include "sparsesph/specfun.hpp"

namespace sparsesph {

// ---------------------------------------------------------------------------
// Direction search

inline constexpr std::size_t kMaxCoarsePoints = 1'000'000;

/// 16 (2l+1)^2 lattice points, capped at 10^6.
inline std::size_t default_coarse_points(int l) {
  const std::size_t n = 2 * static_cast<std::size_t>(std::max(l, 0)) + 1;
  return std::min<std::size_t>(16 * n * n, kMaxCoarsePoints);
}

struct SearchConfig {
  std::size_t coarse_points = 0;  ///< 0 selects default_coarse_points
  int refine_steps = 20;
  Rotation frame;  ///< applied to the lattice and to every tangent basis

  std::size_t resolved_points(int l) const { return coarse_points == 0 ? default_coarse_points(l) : coarse_points; }
};

struct SearchResult {
  UnitVector direction;
  double value = 0.0;
  std::size_t lattice_index = 0;  ///< winner of the coarse scan
  double start_radius = 0.0;
  double final_radius = 0.0;  ///< probe radius of the last refinement round
  bool polished = false;      ///< a Newton polish step was accepted
};

namespace detail {

/// Orthonormal tangent pair at c, built in the unrotated frame.
inline std::array<UnitVector, 2> tangent_basis(const UnitVector& c) {
  // cross with whichever axis is further from c
  const std::array<double, 3> axis = std::abs(c.z()) < 0.9 ? std::array<double, 3>{0, 0, 1} : std::array<double, 3>{1, 0, 0};
  const double ux = axis[1] * c.z() - axis[2] * c.y();
  const double uy = axis[2] * c.x() - axis[0] * c.z();
  const double uz = axis[0] * c.y() - axis[1] * c.x();
  const UnitVector e1(ux, uy, uz);
  const UnitVector e2(c.y() * e1.z() - c.z() * e1.y(), c.z() * e1.x() - c.x() * e1.z(), c.x() * e1.y() - c.y() * e1.x());
  return {e1, e2};
}

}  // namespace detail

/// Maximizes `objective` over S^2. The coarse scan keeps the first lattice
/// index among equal values; each refinement round probes 8 points on a ring
/// of the current radius, moves only on strict improvement, then halves the
/// radius. Up to two Newton steps on a 3x3 tangent stencil then polish the
/// maximizer while the local Hessian is negative definite. The frame rotation
/// makes the search exactly covariant: rotating both the objective and the
/// frame rotates the result.
inline SearchResult argmax_direction(const std::function<double(const UnitVector&)>& objective, std::size_t points,
                                     int refine_steps, const Rotation& frame = {}) {
  if (points < 1) throw InvalidArgument("argmax_direction: need at least one lattice point");
  if (refine_steps < 0) throw InvalidArgument("argmax_direction: refine_steps must be non-negative");
  const auto lattice = fibonacci_lattice(points);
  struct Best {
    double value = -std::numeric_limits<double>::infinity();
    std::size_t index = 0;
  };
  const unsigned threads = detail::default_threads();
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(threads, points));
  std::vector<Best> partial(chunks);
  detail::parallel_chunks(
      chunks,
      [&](std::size_t cb, std::size_t ce) {
        for (std::size_t c = cb; c < ce; ++c) {
          const std::size_t begin = points * c / chunks, end = points * (c + 1) / chunks;
          Best b;
          b.index = begin;
          for (std::size_t i = begin; i < end; ++i) {
            const double v = objective(rotate(frame, lattice[i]));
            if (v > b.value) {
              b.value = v;
              b.index = i;
            }
          }
          partial[c] = b;
        }
      },
      threads);
  Best best = partial[0];
  for (std::size_t c = 1; c < chunks; ++c)
    if (partial[c].value > best.value) best = partial[c];

  SearchResult out;
  out.lattice_index = best.index;
  out.value = best.value;
  out.start_radius = lattice_spacing(points);
  UnitVector local = lattice[best.index];  // unrotated frame
  out.direction = rotate(frame, local);
  double radius = out.start_radius;
  for (int step = 0; step < refine_steps; ++step) {
    const auto [e1, e2] = detail::tangent_basis(local);
    const double cr = std::cos(radius), sr = std::sin(radius);
    UnitVector best_local = local;
    double best_value = out.value;
    for (int j = 0; j < 8; ++j) {
      const double a = std::numbers::pi * j / 4.0;
      const double ca = std::cos(a) * sr, sa = std::sin(a) * sr;
      const UnitVector probe(cr * local.x() + ca * e1.x() + sa * e2.x(), cr * local.y() + ca * e1.y() + sa * e2.y(),
                             cr * local.z() + ca * e1.z() + sa * e2.z());
      const double v = objective(rotate(frame, probe));
      if (v > best_value) {
        best_value = v;
        best_local = probe;
      }
    }
    if (best_value > out.value) {
      local = best_local;
      out.value = best_value;
      out.direction = rotate(frame, local);
    }
    out.final_radius = radius;
    radius *= 0.5;
  }
  if (refine_steps > 0) {
    // gnomonic chart around `local`
    constexpr double h = 1e-4;
    for (int pass = 0; pass < 2; ++pass) {
      const auto [e1, e2] = detail::tangent_basis(local);
      const auto chart = [&, e1 = e1, e2 = e2](double u, double v) {
        return UnitVector(local.x() + u * e1.x() + v * e2.x(), local.y() + u * e1.y() + v * e2.y(),
                          local.z() + u * e1.z() + v * e2.z());
      };
      const auto f = [&](double u, double v) { return objective(rotate(frame, chart(u, v))); };
      const double f0 = out.value;
      const double fp = f(h, 0), fm = f(-h, 0), gp = f(0, h), gm = f(0, -h);
      const double fpp = f(h, h), fpm = f(h, -h), fmp = f(-h, h), fmm = f(-h, -h);
      const double g1 = (fp - fm) / (2 * h), g2 = (gp - gm) / (2 * h);
      const double h11 = (fp - 2 * f0 + fm) / (h * h), h22 = (gp - 2 * f0 + gm) / (h * h);
      const double h12 = (fpp - fpm - fmp + fmm) / (4 * h * h);
      const double det = h11 * h22 - h12 * h12;
      if (!(h11 < 0.0 && det > 0.0)) break;
      const double s1 = -(h22 * g1 - h12 * g2) / det, s2 = -(h11 * g2 - h12 * g1) / det;
      if (!(std::hypot(s1, s2) <= std::max(h, 2.0 * out.final_radius))) break;
      const UnitVector moved = chart(s1, s2);
      const double v = objective(rotate(frame, moved));
      if (!(v >= out.value)) break;
      local = moved;
      out.value = v;
      out.direction = rotate(frame, local);
      out.polished = true;
    }
  }
  return out;
}

/// argmax_x |<a_res, Y_l(x)>|^2 for a single-multipole residual.
inline SearchResult argmax_direction(std::span<const cplx> a_res, const SearchConfig& cfg = {}) {
  if (a_res.size() % 2 != 1) throw InvalidArgument("argmax_direction: residual must have odd length 2l+1");
  const int l = static_cast<int>(a_res.size() / 2);
  const auto obj = [a_res](const UnitVector& x) { return std::norm(evaluate_ell(a_res, x)); };
  return argmax_direction(obj, cfg.resolved_points(l), cfg.refine_steps, cfg.frame);
}

// ---------------------------------------------------------------------------
// Monochromatic matching pursuit

struct MonoStep {
  UnitVector direction;
  double coefficient = 0.0;    ///< T_l(xi_k; k-1) = <a(k-1), conj Y(xi_k)>
  double residual_norm = 0.0;  ///< ||a(k)||
  double defect = 0.0;         ///< max_{j<k} |<w_j, w_k>| / ||w||^2
  std::size_t lattice_index = 0;
};

struct MonoTrace {
  int ell = 0;
  int requested_steps = 0;
  double initial_norm = 0.0;
  std::string stop_reason;  ///< "max-K", "converged" or "zero-input"
  std::vector<MonoStep> steps;
};

struct MonoResult {
  MonoTrace trace;
  SparseField component;       ///< S^K as waves at multipole ell only
  std::vector<cplx> residual;  ///< a(K)
  std::vector<cplx> output;    ///< coefficients of S^K
};

inline constexpr double kMonoEarlyStop = 1e-10;

/// Exact projection update a <- a - <a, w>/||w||^2 w with w = conj(Y_l(xi)).
/// Returns the removed inner product <a, w>, real for conjugate-symmetric a.
inline cplx project_out(std::vector<cplx>& a, const std::vector<cplx>& w) {
  cplx ip(0.0, 0.0);
  double ww = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ip += a[i] * std::conj(w[i]);
    ww += std::norm(w[i]);
  }
  const cplx f = ip / ww;
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= f * w[i];
  return ip;
}

inline double vector_norm(std::span<const cplx> a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return std::sqrt(s);
}

/// Up to K greedy steps on a_l (length 2l+1). Stops early once the residual
/// falls to 1e-10 of the initial norm.
inline MonoResult greedy_mono(std::span<const cplx> a_l, int K, const SearchConfig& cfg = {}) {
  if (K < 1) throw InvalidArgument("greedy_mono: K must be at least 1");
  if (a_l.size() % 2 != 1) throw InvalidArgument("greedy_mono: a_l must have odd length 2l+1");
  const int l = static_cast<int>(a_l.size() / 2);
  const double wnorm2 = (2.0 * l + 1.0) / kFourPi;

  MonoResult out;
  out.trace.ell = l;
  out.trace.requested_steps = K;
  out.residual.assign(a_l.begin(), a_l.end());
  out.output.assign(a_l.size(), cplx(0.0, 0.0));
  out.trace.initial_norm = vector_norm(a_l);
  out.trace.stop_reason = "max-K";

  std::vector<UnitVector> dirs;
  std::vector<double> eta;
  std::vector<std::vector<cplx>> atoms;
  if (out.trace.initial_norm == 0.0) {
    out.trace.stop_reason = "zero-input";
  } else {
    for (int k = 0; k < K; ++k) {
      const SearchResult sr = argmax_direction(out.residual, cfg);
      auto w = sph_harm_vector(l, sr.direction);
      for (auto& v : w) v = std::conj(v);
      MonoStep step;
      step.direction = sr.direction;
      step.lattice_index = sr.lattice_index;
      for (const auto& prev : atoms) {
        cplx ip(0.0, 0.0);
        for (std::size_t i = 0; i < w.size(); ++i) ip += prev[i] * std::conj(w[i]);
        step.defect = std::max(step.defect, std::min(1.0, std::abs(ip) / wnorm2));
      }
      const cplx ip = project_out(out.residual, w);
      step.coefficient = ip.real();
      step.residual_norm = vector_norm(out.residual);
      const cplx coef = ip / wnorm2;
      for (std::size_t i = 0; i < w.size(); ++i) out.output[i] += coef * w[i];
      dirs.push_back(sr.direction);
      eta.push_back(kFourPi * step.coefficient / (2.0 * l + 1.0));
      atoms.push_back(std::move(w));
      out.trace.steps.push_back(step);
      if (step.residual_norm <= kMonoEarlyStop * out.trace.initial_norm) {
        if (k + 1 < K) out.trace.stop_reason = "converged";
        break;
      }
    }
  }
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(l) + 1, std::vector<double>(dirs.size(), 0.0));
  weights[static_cast<std::size_t>(l)] = eta;
  Provenance p;
  p.generator = "greedy-mono";
  p.parameters["ell"] = l;
  p.parameters["K"] = K;
  out.component = SparseField::shared(std::move(dirs), std::move(weights), std::move(p));
  return out;
}

struct MonoSpectrumCheck {
  double from_weights = 0.0;       ///< (4 pi)^{-1} sum_k eta_k^2
  double from_output = 0.0;        ///< (2l+1)^{-1} ||S^K coefficients||^2
  double from_input = 0.0;         ///< (2l+1)^{-1} ||a(0)||^2
  double defect_bound = 0.0;       ///< bound on |from_output - from_weights|
  double relative_difference = 0.0;
  bool flagged = false;            ///< relative difference above 1e-4
};

/// Compares the weight-sum spectrum with coefficient-based ones. The exact gap
/// between from_output and from_weights is (4 pi)^{-1} sum_{j != k} eta_j eta_k
/// P_l(<xi_j, xi_k>), bounded through the recorded defects.
inline MonoSpectrumCheck empirical_spectrum_of_mono_output(const MonoResult& r) {
  const int l = r.trace.ell;
  MonoSpectrumCheck c;
  const std::size_t K = r.trace.steps.size();
  std::vector<double> eta(K);
  for (std::size_t k = 0; k < K; ++k) eta[k] = r.component.weight(l, k);
  for (double e : eta) c.from_weights += e * e;
  c.from_weights /= kFourPi;
  const double out_norm = vector_norm(r.output);
  c.from_output = out_norm * out_norm / (2.0 * l + 1.0);
  std::vector<cplx> input = r.residual;
  for (std::size_t i = 0; i < input.size(); ++i) input[i] += r.output[i];
  const double in_norm = vector_norm(input);
  c.from_input = in_norm * in_norm / (2.0 * l + 1.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < k; ++j) c.defect_bound += 2.0 * std::abs(eta[j] * eta[k]) * r.trace.steps[k].defect;
  c.defect_bound /= kFourPi;
  const double scale = std::max(std::abs(c.from_weights), std::abs(c.from_output));
  c.relative_difference = scale > 0.0 ? std::abs(c.from_output - c.from_weights) / scale : 0.0;
  c.flagged = c.relative_difference > 1e-4;
  return c;
}

// ---------------------------------------------------------------------------
// Polychromatic reconstruction

/// R(xi) = sqrt(4 pi) |sum_l sqrt(C_l) T_l(xi)| / sum_l (2l+1) C_l with T_l
/// evaluated from the residual coefficients.
inline double projection_index(const HarmonicCoefficients& residual, std::span<const double> chat,
                               const UnitVector& xi) {
  if (chat.size() != static_cast<std::size_t>(residual.lmax()) + 1)
    throw InvalidArgument("projection_index: spectrum length must be lmax+1");
  double energy = 0.0;
  for (std::size_t l = 0; l < chat.size(); ++l) energy += (2.0 * static_cast<double>(l) + 1.0) * chat[l];
  if (!(energy > 0.0)) throw DegenerateInput("projection_index: residual has zero energy");
  double num = 0.0;
  for (int l = 0; l <= residual.lmax(); ++l)
    if (chat[l] > 0.0) num += std::sqrt(chat[l]) * evaluate_ell(residual.ell(l), xi).real();
  return std::sqrt(kFourPi) * std::abs(num) / energy;
}

struct PolyStep {
  UnitVector direction;
  std::vector<double> residual_spectrum;  ///< C-hat_l(k)
  std::vector<double> eta;                ///< sqrt(4 pi C-hat_l(k))
  double index = 0.0;                     ///< R_k
  double committed_factor = 0.0;          ///< R_k inside the loop, 1 for the last step
  std::size_t lattice_index = 0;
  HarmonicCoefficients component;         ///< S(.; k)
};

struct PolyTrace {
  double epsilon = 0.0;
  int max_steps = 0;
  std::string termination;  ///< "index-threshold" or "max-K"
  std::vector<PolyStep> steps;
};

struct PolyResult {
  PolyTrace trace;
  HarmonicCoefficients output;    ///< F
  HarmonicCoefficients residual;  ///< T minus the in-loop commits
  SparseField output_field;       ///< F as waves: weights committed_factor * eta
};

/// Coefficients of sum_l eta_l (2l+1)/(4 pi) P_l(<xi, .>).
inline HarmonicCoefficients wave_coefficients(std::span<const double> eta, const UnitVector& xi) {
  const int L = static_cast<int>(eta.size()) - 1;
  HarmonicCoefficients c(L);
  const auto y = sph_harm_all(L, xi);
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) c(l, m) = eta[l] * std::conj(y[lm_index(l, m)]);
  return c;
}

/// Loop: while R <= 1 - eps and k < K, commit R S(.;k) to F and subtract it
/// from the residual, recompute the residual spectrum, set eta_l =
/// sqrt(4 pi C-hat_l), pick xi maximizing sum_l sqrt(C-hat_l) T_l(xi), build
/// S(.;k) and its index. The first pass commits S(.;0) = 0; on exit the last
/// S is committed with factor 1.
inline PolyResult greedy_poly(const HarmonicCoefficients& T, double eps, int K, SearchConfig cfg = {}) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("greedy_poly: epsilon must lie in (0, 1)");
  if (K < 1) throw InvalidArgument("greedy_poly: K must be at least 1");
  const int L = T.lmax();
  if (cfg.coarse_points == 0) cfg.coarse_points = default_coarse_points(L);

  PolyResult out{PolyTrace{eps, K, "max-K", {}}, HarmonicCoefficients(L), T};
  HarmonicCoefficients S(L);
  double R = 0.0;
  int k = 0;
  bool exhausted = false;
  while (R <= 1.0 - eps && k < K) {
    if (k > 0) {
      HarmonicCoefficients commit = S;
      commit *= R;
      out.output += commit;
      out.residual -= commit;
      out.trace.steps.back().committed_factor = R;
    }
    ++k;
    PolyStep step;
    step.residual_spectrum = power_spectrum(out.residual);
    double energy = 0.0;
    for (int l = 0; l <= L; ++l) energy += (2.0 * l + 1.0) * step.residual_spectrum[l];
    if (!(energy > 0.0)) {
      if (k == 1) throw DegenerateInput("greedy_poly: input has zero energy");
      exhausted = true;
      break;
    }
    HarmonicCoefficients weighted(L);
    step.eta.resize(static_cast<std::size_t>(L) + 1);
    for (int l = 0; l <= L; ++l) {
      const double root = std::sqrt(step.residual_spectrum[l]);
      step.eta[l] = std::sqrt(kFourPi) * root;
      for (int m = -l; m <= l; ++m) weighted(l, m) = root * out.residual(l, m);
    }
    const auto obj = [&weighted](const UnitVector& x) { return evaluate(weighted, x).real(); };
    const SearchResult sr = argmax_direction(obj, cfg.coarse_points, cfg.refine_steps, cfg.frame);
    step.direction = sr.direction;
    step.lattice_index = sr.lattice_index;
    S = wave_coefficients(step.eta, sr.direction);
    R = projection_index(out.residual, step.residual_spectrum, sr.direction);
    step.index = R;
    step.component = S;
    out.trace.steps.push_back(std::move(step));
  }
  if (R > 1.0 - eps || exhausted) out.trace.termination = "index-threshold";
  if (!exhausted) {
    out.output += S;
    out.trace.steps.back().committed_factor = 1.0;
  }
  std::vector<UnitVector> dirs;
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(L) + 1);
  for (const auto& st : out.trace.steps) {
    if (st.committed_factor == 0.0) continue;
    dirs.push_back(st.direction);
    for (int l = 0; l <= L; ++l) weights[l].push_back(st.committed_factor * st.eta[l]);
  }
  Provenance p;
  p.generator = "greedy-poly";
  p.parameters["epsilon"] = eps;
  p.parameters["K"] = K;
  out.output_field = SparseField::shared(std::move(dirs), std::move(weights), std::move(p));
  return out;
}

}  // namespace sparsesph
