// SPDX-License-Identifier: Apache-2.0
#pragma once

// Closed-form stability and concentration bounds as functions of certified
// constants. All functions are pure.

#include <cstddef>

#include "gscert/forward.hpp"
#include "gscert/param_space.hpp"

namespace gscert {

/// (1/kappa) (eps + sqrt(gap + eps^2)); kappa <= 0 raises a certification error.
double det_stability_bound(double kappa, double eps_eta, double misfit_gap);

/// Largest d with d = (1/kappa)(eps + sqrt(L d + eps^2)): (2 kappa eps + L) / kappa^2.
double det_error_envelope(double kappa, double eps_eta, double L);

struct FixedPoint {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Iterates d <- (1/kappa)(eps + sqrt(L d + eps^2)) from above until the relative
/// change is below `rel_tol`.
FixedPoint det_error_envelope_iterate(double kappa, double eps_eta, double L,
                                      double rel_tol = 1e-15, int max_iter = 500);

/// 2 exp(-min(t / (8 sigma^2), t^2 / (32 sigma^2 G^2 N d^2))), unclamped.
/// With d = 0 the second branch is infinite and the first is used.
double concentration_tail_raw(double t, double sigma2, double G, std::size_t N, double d);
/// The same value clamped to [0, 1].
double concentration_tail(double t, double sigma2, double G, std::size_t N, double d);

/// max(8 sigma^2 log(2/delta), sqrt(32 sigma^2 G^2 N d^2 log(2/delta))).
double select_t(double delta, double sigma2, double G, std::size_t N, double d_bound);

struct HighProbabilityBound {
  double radius = 0.0;
  double confidence = 0.0;
};

/// radius = (1/kappa)(eps + sqrt(expected_gap + t + eps^2)),
/// confidence = 1 - exp(-t / (4 G^2 N d^2 + 4 sigma^2)).
HighProbabilityBound hp_error_bound(double kappa, double eps_eta, double expected_gap, double t,
                                    double sigma2, double G, std::size_t N, double d);

struct SelectedT {
  double t = 0.0;
  double d = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Alternates t = select_t(d) and d = hp radius(t) starting from d0 (typically
/// the deterministic envelope); at most 20 iterations, relative tolerance 1e-8.
SelectedT select_t_iterated(double delta, double sigma2, double G, std::size_t N, double kappa,
                            double eps_eta, double expected_gap, double d0);

/// (lambda_eff / G) sqrt(M / N); G = 0 raises a certification error.
double tradeoff_floor(double lambda_eff, double G, std::size_t M, std::size_t N);

struct MisfitGap {
  double gap = 0.0;    // ||A(Z) - A(Z*)||^2
  double upper = 0.0;  // G^2 N d2(Z, Z*)^2
};

MisfitGap expected_misfit_gap(const ForwardOperator& op, const Scene& z, const Scene& z_star,
                              double G);
MisfitGap expected_misfit_gap(const Scene& z, const Scene& z_star, const ImageGrid& grid, double G);

struct BoundInputs {
  double kappa = 0.0;
  double eps_eta = 0.0;
  double misfit_gap = 0.0;
  double expected_gap = 0.0;
  double L = 0.0;
  double sigma2 = 0.0;
  double G = 0.0;
  std::size_t N = 1;
  std::size_t M = 1;
  double d = 0.0;
  double delta = 0.05;
  double lambda_eff = 0.0;
};

struct BoundReport {
  BoundInputs inputs;
  double det_radius = 0.0;
  double det_envelope = 0.0;
  double t = 0.0;
  double hp_radius = 0.0;
  double confidence = 0.0;
  double tail_prob = 0.0;      // clamped to [0, 1]
  double tail_prob_raw = 0.0;  // as displayed, may exceed 1
  double C_stab = 0.0;
  double tradeoff_floor = 0.0;
};

/// Evaluates every bound at the given inputs; t comes from select_t at inputs.d.
BoundReport evaluate_bounds(const BoundInputs& in);

}  // namespace gscert
