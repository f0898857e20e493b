// SPDX-License-Identifier: Apache-2.0
#include "gscert/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gscert/error.hpp"

namespace gscert {

namespace {

void require_kappa(double kappa) {
  require(kappa > 0.0 && std::isfinite(kappa), ErrorKind::certification,
          "kappa must be positive: identifiability not certified");
}

void require_nonneg(double v, const char* name) {
  require(v >= 0.0 && std::isfinite(v), ErrorKind::precondition,
          std::string(name) + " must be finite and >= 0");
}

}  // namespace

double det_stability_bound(double kappa, double eps_eta, double misfit_gap) {
  require_kappa(kappa);
  require_nonneg(eps_eta, "eps_eta");
  require_nonneg(misfit_gap, "misfit_gap");
  return (eps_eta + std::sqrt(misfit_gap + eps_eta * eps_eta)) / kappa;
}

double det_error_envelope(double kappa, double eps_eta, double L) {
  require_kappa(kappa);
  require_nonneg(eps_eta, "eps_eta");
  require_nonneg(L, "L");
  return (2.0 * kappa * eps_eta + L) / (kappa * kappa);
}

FixedPoint det_error_envelope_iterate(double kappa, double eps_eta, double L, double rel_tol,
                                      int max_iter) {
  require_kappa(kappa);
  require_nonneg(eps_eta, "eps_eta");
  require_nonneg(L, "L");
  // The map is increasing and concave with slope < 1/2 at the positive root,
  // so iterating from any point above it descends monotonically.
  FixedPoint fp;
  double d = 2.0 * eps_eta / kappa + L / (kappa * kappa) + 1.0;
  for (fp.iterations = 1; fp.iterations <= max_iter; ++fp.iterations) {
    const double next = (eps_eta + std::sqrt(L * d + eps_eta * eps_eta)) / kappa;
    const double change = std::abs(next - d);
    d = next;
    if (change <= rel_tol * std::max(d, std::numeric_limits<double>::min())) {
      fp.converged = true;
      break;
    }
  }
  fp.value = d;
  return fp;
}

double concentration_tail_raw(double t, double sigma2, double G, std::size_t N, double d) {
  require(t > 0.0, ErrorKind::precondition, "concentration_tail needs t > 0");
  require_nonneg(sigma2, "sigma2");
  require_nonneg(G, "G");
  require_nonneg(d, "d");
  const double inf = std::numeric_limits<double>::infinity();
  const double first = sigma2 > 0.0 ? t / (8.0 * sigma2) : inf;
  const double k = G * G * static_cast<double>(N) * d * d;
  const double second = (sigma2 > 0.0 && k > 0.0) ? t * t / (32.0 * sigma2 * k) : inf;
  return 2.0 * std::exp(-std::min(first, second));
}

double concentration_tail(double t, double sigma2, double G, std::size_t N, double d) {
  return std::clamp(concentration_tail_raw(t, sigma2, G, N, d), 0.0, 1.0);
}

double select_t(double delta, double sigma2, double G, std::size_t N, double d_bound) {
  require(delta > 0.0 && delta < 1.0, ErrorKind::precondition, "select_t needs delta in (0, 1)");
  require_nonneg(sigma2, "sigma2");
  require_nonneg(G, "G");
  require_nonneg(d_bound, "d_bound");
  const double lg = std::log(2.0 / delta);
  const double k = G * G * static_cast<double>(N) * d_bound * d_bound;
  return std::max(8.0 * sigma2 * lg, std::sqrt(32.0 * sigma2 * k * lg));
}

HighProbabilityBound hp_error_bound(double kappa, double eps_eta, double expected_gap, double t,
                                    double sigma2, double G, std::size_t N, double d) {
  require_kappa(kappa);
  require_nonneg(eps_eta, "eps_eta");
  require_nonneg(expected_gap, "expected_gap");
  require(t > 0.0, ErrorKind::precondition, "hp_error_bound needs t > 0");
  require_nonneg(sigma2, "sigma2");
  require_nonneg(d, "d");
  HighProbabilityBound b;
  b.radius = (eps_eta + std::sqrt(expected_gap + t + eps_eta * eps_eta)) / kappa;
  const double denom = 4.0 * G * G * static_cast<double>(N) * d * d + 4.0 * sigma2;
  b.confidence = denom > 0.0 ? 1.0 - std::exp(-t / denom) : 1.0;
  return b;
}

SelectedT select_t_iterated(double delta, double sigma2, double G, std::size_t N, double kappa,
                            double eps_eta, double expected_gap, double d0) {
  SelectedT s;
  s.d = d0;
  for (s.iterations = 1; s.iterations <= 20; ++s.iterations) {
    s.t = select_t(delta, sigma2, G, N, s.d);
    if (s.t <= 0.0) {
      s.converged = true;
      break;
    }
    const double next = hp_error_bound(kappa, eps_eta, expected_gap, s.t, sigma2, G, N, s.d).radius;
    const double change = std::abs(next - s.d);
    s.d = next;
    if (change <= 1e-8 * std::max(next, std::numeric_limits<double>::min())) {
      s.converged = true;
      s.t = select_t(delta, sigma2, G, N, s.d);
      break;
    }
  }
  s.iterations = std::min(s.iterations, 20);
  return s;
}

double tradeoff_floor(double lambda_eff, double G, std::size_t M, std::size_t N) {
  require(G > 0.0, ErrorKind::certification, "tradeoff floor is undefined for G = 0");
  require(M >= 1 && N >= 1, ErrorKind::precondition, "tradeoff floor needs M, N >= 1");
  require_nonneg(lambda_eff, "lambda_eff");
  return lambda_eff / G * std::sqrt(static_cast<double>(M) / static_cast<double>(N));
}

MisfitGap expected_misfit_gap(const ForwardOperator& op, const Scene& z, const Scene& z_star,
                              double G) {
  MisfitGap g;
  g.gap = (op.apply(z).values - op.apply(z_star).values).squaredNorm();
  const double d = d2_distance(z, z_star);
  g.upper = G * G * static_cast<double>(z.size()) * d * d;
  return g;
}

MisfitGap expected_misfit_gap(const Scene& z, const Scene& z_star, const ImageGrid& grid,
                              double G) {
  return expected_misfit_gap(GaussianSplatOperator(grid), z, z_star, G);
}

BoundReport evaluate_bounds(const BoundInputs& in) {
  BoundReport r;
  r.inputs = in;
  r.det_radius = det_stability_bound(in.kappa, in.eps_eta, std::max(in.misfit_gap, 0.0));
  r.det_envelope = det_error_envelope(in.kappa, in.eps_eta, in.L);
  r.t = select_t(in.delta, in.sigma2, in.G, in.N, in.d);
  if (r.t > 0.0) {
    const auto hp = hp_error_bound(in.kappa, in.eps_eta, std::max(in.expected_gap, 0.0), r.t,
                                   in.sigma2, in.G, in.N, in.d);
    r.hp_radius = hp.radius;
    r.confidence = hp.confidence;
    r.tail_prob_raw = concentration_tail_raw(r.t, in.sigma2, in.G, in.N, in.d);
    r.tail_prob = std::clamp(r.tail_prob_raw, 0.0, 1.0);
  } else {
    // Noise-free: the deviation is identically zero.
    r.hp_radius = det_stability_bound(in.kappa, in.eps_eta, std::max(in.expected_gap, 0.0));
    r.confidence = 1.0;
  }
  r.C_stab = in.lambda_eff / in.G;
  r.tradeoff_floor = tradeoff_floor(in.lambda_eff, in.G, in.M, in.N);
  return r;
}

}  // namespace gscert
