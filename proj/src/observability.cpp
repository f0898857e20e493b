// SPDX-License-Identifier: Apache-2.0
#include "gscert/observability.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gscert/error.hpp"
#include "gscert/runtime.hpp"

namespace gscert {

namespace {

constexpr Eigen::Index kWeakDirections = 4;
constexpr int kDistances = 9;

Eigen::MatrixXd free_columns(const Eigen::MatrixXd& jac, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(jac.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = jac.col(cols[k]);
  return out;
}

struct GrowthContext {
  const ForwardOperator& op;
  const Scene& z_star;
  const Spectrum& spectrum;
  std::vector<Eigen::Index> free;
  Eigen::VectorXd z0;
  Eigen::VectorXd a_star;
};

GrowthCheck run_growth(const GrowthContext& ctx, double radius, std::size_t samples,
                       std::uint64_t seed) {
  require(radius > 0.0 && std::isfinite(radius), ErrorKind::precondition,
          "quadratic growth check needs a positive radius");
  const auto dim = ctx.z0.size();
  std::vector<Eigen::VectorXd> dirs;
  const Eigen::Index weak = ctx.spectrum.weakest.cols();
  for (Eigen::Index j = 0; j < weak; ++j) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
    for (std::size_t k = 0; k < ctx.free.size(); ++k)
      u[ctx.free[k]] = ctx.spectrum.weakest(static_cast<Eigen::Index>(k), j);
    dirs.push_back(u);
    dirs.push_back(-u);
  }
  for (std::size_t s = 0; s < samples; ++s) {
    Engine rng = make_engine(seed, s);
    std::normal_distribution<double> normal;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
    double n2 = 0.0;
    while (n2 == 0.0) {
      for (auto c : ctx.free) u[c] = normal(rng);
      n2 = u.squaredNorm();
    }
    dirs.push_back(u / std::sqrt(n2));
  }

  std::vector<double> mins(dirs.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> counts(dirs.size(), 0);
  parallel_for(dirs.size(), [&](std::size_t i) {
    for (int k = 0; k < kDistances; ++k) {
      const double s = radius * std::pow(1e-4, 1.0 - static_cast<double>(k) / (kDistances - 1));
      const Scene z = project_to_domain(from_vector(ctx.z_star.domain, ctx.z0 + s * dirs[i]));
      const double d = d2_distance(z, ctx.z_star);
      if (d == 0.0) continue;
      const double ratio = (ctx.op.apply(z).values - ctx.a_star).norm() / d;
      mins[i] = std::min(mins[i], ratio);
      ++counts[i];
    }
  });

  GrowthCheck g;
  g.sigma_min = ctx.spectrum.sigma_min;
  g.tolerance = ctx.spectrum.tolerance();
  g.sampled_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    g.sampled_min = std::min(g.sampled_min, mins[i]);
    g.evaluated += counts[i];
  }
  g.kappa_hat = std::min(g.sampled_min, g.sigma_min);
  g.certified = g.kappa_hat > g.tolerance;
  return g;
}

GrowthContext make_context(const ForwardOperator& op, const Scene& z_star, const Spectrum& spectrum,
                           Gauge gauge) {
  return GrowthContext{op, z_star, spectrum, free_coordinates(z_star.size(), gauge), to_vector(z_star),
                       op.apply(z_star).values};
}

}  // namespace

double Spectrum::tolerance() const {
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() *
         sigma_max;
}

Spectrum jacobian_spectrum(const ForwardOperator& op, const Scene& z_star, Gauge gauge) {
  validate_scene(z_star);
  const auto free = free_coordinates(z_star.size(), gauge);
  const Eigen::MatrixXd j = free_columns(op.jacobian(z_star), free);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Spectrum s;
  s.rows = j.rows();
  s.cols = j.cols();
  s.sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  // A wide Jacobian (fewer rows than columns) has a nontrivial null space.
  s.sigma_min = (sv.size() > 0 && j.rows() >= j.cols()) ? sv(sv.size() - 1) : 0.0;
  const Eigen::Index weak = std::min(kWeakDirections, j.cols());
  s.weakest.resize(j.cols(), weak);
  for (Eigen::Index k = 0; k < weak; ++k) s.weakest.col(k) = svd.matrixV().col(j.cols() - 1 - k);
  return s;
}

double jacobian_sigma_min(const ForwardOperator& op, const Scene& z_star, Gauge gauge) {
  return jacobian_spectrum(op, z_star, gauge).sigma_min;
}

double jacobian_sigma_min(const Scene& z_star, const ImageGrid& grid, Gauge gauge) {
  return jacobian_sigma_min(GaussianSplatOperator(grid), z_star, gauge);
}

double matrix_sigma_min(const Eigen::MatrixXd& m) {
  if (m.rows() < m.cols() || m.cols() == 0) return 0.0;
  const auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  return sv(sv.size() - 1);
}

double estimate_lambda_eff(double sigma_min, std::size_t pixels) {
  require(pixels >= 1, ErrorKind::precondition, "lambda_eff needs M >= 1");
  require(sigma_min >= 0.0, ErrorKind::precondition, "sigma_min must be >= 0");
  const double root = std::sqrt(static_cast<double>(pixels));
  const double base = sigma_min / root;
  if (base * root == sigma_min) return base;
  double up = base, down = base;
  for (int k = 0; k < 4; ++k) {
    up = std::nextafter(up, std::numeric_limits<double>::infinity());
    if (up * root == sigma_min) return up;
    down = std::nextafter(down, 0.0);
    if (down * root == sigma_min) return down;
  }
  return base;
}

double estimate_lambda_eff(const ForwardOperator& op, const Scene& z_star, Gauge gauge) {
  return estimate_lambda_eff(jacobian_sigma_min(op, z_star, gauge), op.grid().pixels());
}

GrowthCheck verify_quadratic_growth(const ForwardOperator& op, const Scene& z_star, double radius,
                                    std::size_t samples, std::uint64_t seed, Gauge gauge) {
  require(radius > 0.0 && std::isfinite(radius), ErrorKind::precondition,
          "quadratic growth check needs a positive radius");
  const Spectrum spectrum = jacobian_spectrum(op, z_star, gauge);
  return run_growth(make_context(op, z_star, spectrum, gauge), radius, samples, seed);
}

RadiusEstimate estimate_r0(const ForwardOperator& op, const Scene& z_star, double fraction,
                           std::size_t samples, std::uint64_t seed, double r_max, Gauge gauge) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::precondition,
          "kappa fraction must lie in (0, 1]");
  require(r_max > 0.0 && std::isfinite(r_max), ErrorKind::precondition,
          "radius search needs a positive upper limit");
  const Spectrum spectrum = jacobian_spectrum(op, z_star, gauge);
  const GrowthContext ctx = make_context(op, z_star, spectrum, gauge);
  RadiusEstimate est;
  est.sigma_min = spectrum.sigma_min;
  if (spectrum.sigma_min <= spectrum.tolerance()) return est;

  const double target = fraction * spectrum.sigma_min;
  auto growth = [&](double r) {
    ++est.evaluations;
    return run_growth(ctx, r, samples, seed).sampled_min;
  };
  double lo = r_max, hi = r_max;
  double kappa_lo = growth(r_max);
  if (kappa_lo < target) {
    lo = r_max * std::ldexp(1.0, -20);
    kappa_lo = growth(lo);
    if (kappa_lo < target) return est;
    while (hi / lo > 2.0) {
      const double mid = std::sqrt(lo * hi);
      const double k = growth(mid);
      if (k >= target) {
        lo = mid;
        kappa_lo = k;
      } else {
        hi = mid;
      }
    }
  }
  est.r0 = lo;
  est.kappa_hat = std::min(kappa_lo, spectrum.sigma_min);
  est.certified = est.kappa_hat > spectrum.tolerance();
  return est;
}

StabilityEstimate estimate_stability(const ForwardOperator& op, const Scene& z_star,
                                     double kappa_fraction, std::size_t samples,
                                     std::uint64_t seed, double r_max, Gauge gauge) {
  const Spectrum spectrum = jacobian_spectrum(op, z_star, gauge);
  const RadiusEstimate r0 = estimate_r0(op, z_star, kappa_fraction, samples, seed, r_max, gauge);
  StabilityEstimate s;
  s.grid_id = op.grid().id();
  s.pixels = op.grid().pixels();
  s.gauge = gauge;
  s.sigma_min = spectrum.sigma_min;
  s.sigma_max = spectrum.sigma_max;
  s.lambda_eff = estimate_lambda_eff(spectrum.sigma_min, s.pixels);
  s.kappa_hat = r0.kappa_hat;
  s.r0_hat = r0.r0;
  s.certified = r0.certified;
  s.kappa_fraction = kappa_fraction;
  s.radius_max = r_max;
  s.growth_samples = samples;
  s.jacobian_columns = static_cast<std::size_t>(spectrum.cols);
  return s;
}

}  // namespace gscert
