// SPDX-License-Identifier: Apache-2.0
#pragma once

// Local identifiability at a ground-truth scene: Jacobian spectrum, effective
// observability lambda_eff = sigma_min / sqrt(M), sampled quadratic growth
// (kappa_hat) and the radius r0 on which it holds.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <string>

#include "gscert/forward.hpp"
#include "gscert/param_space.hpp"

namespace gscert {

struct Spectrum {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  /// Right singular vectors (free coordinates only), weakest first.
  Eigen::MatrixXd weakest;

  /// Numerical-rank tolerance max(rows, cols) * eps * sigma_max.
  double tolerance() const;
};

/// Dense SVD of the Jacobian restricted to the free coordinates of `gauge`.
Spectrum jacobian_spectrum(const ForwardOperator& op, const Scene& z_star,
                           Gauge gauge = Gauge::none);

double jacobian_sigma_min(const ForwardOperator& op, const Scene& z_star,
                          Gauge gauge = Gauge::none);
double jacobian_sigma_min(const Scene& z_star, const ImageGrid& grid, Gauge gauge = Gauge::none);

/// Smallest singular value of an explicit matrix.
double matrix_sigma_min(const Eigen::MatrixXd& m);

/// sigma_min / sqrt(M), nudged by at most a few ulps so that the product with
/// sqrt(M) reproduces sigma_min exactly whenever such a double exists.
double estimate_lambda_eff(double sigma_min, std::size_t pixels);
double estimate_lambda_eff(const ForwardOperator& op, const Scene& z_star,
                           Gauge gauge = Gauge::none);

struct GrowthCheck {
  bool certified = false;
  double kappa_hat = 0.0;
  /// Minimum ratio over the sampled points alone (without the s -> 0 limit).
  double sampled_min = 0.0;
  double sigma_min = 0.0;
  double tolerance = 0.0;
  std::size_t evaluated = 0;
};

/// kappa_hat = min ||A(Z) - A(Z*)|| / d2(Z, Z*) over points at log-spaced
/// distances in [1e-4 r, r] along `samples` random free directions plus the
/// weakest singular directions (both signs), and the linearized limit sigma_min.
GrowthCheck verify_quadratic_growth(const ForwardOperator& op, const Scene& z_star, double radius,
                                    std::size_t samples, std::uint64_t seed,
                                    Gauge gauge = Gauge::none);

struct RadiusEstimate {
  double r0 = 0.0;
  bool certified = false;
  double kappa_hat = 0.0;  // growth constant verified on the r0 ball
  double sigma_min = 0.0;
  int evaluations = 0;
};

/// Largest radius (within a factor 2) in [r_max 2^-20, r_max] on which
/// verify_quadratic_growth's sampled minimum reaches fraction * sigma_min.
RadiusEstimate estimate_r0(const ForwardOperator& op, const Scene& z_star, double fraction,
                           std::size_t samples, std::uint64_t seed, double r_max,
                           Gauge gauge = Gauge::none);

struct StabilityEstimate {
  std::string grid_id;
  std::size_t pixels = 0;
  Gauge gauge = Gauge::none;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double lambda_eff = 0.0;
  double kappa_hat = 0.0;
  double r0_hat = 0.0;
  bool certified = false;
  double kappa_fraction = 0.5;
  double radius_max = 0.0;
  std::size_t growth_samples = 0;
  std::size_t jacobian_columns = 0;
};

StabilityEstimate estimate_stability(const ForwardOperator& op, const Scene& z_star,
                                     double kappa_fraction, std::size_t samples,
                                     std::uint64_t seed, double r_max, Gauge gauge);

}  // namespace gscert
