// SPDX-License-Identifier: Apache-2.0
#include "gscert/constants.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>

#include "gscert/error.hpp"
#include "gscert/runtime.hpp"

namespace gscert {

double analytic_output_bound(double alpha_max, double color_max, std::size_t N,
                             const ImageGrid& grid) {
  require(alpha_max >= 0.0 && color_max >= 0.0, ErrorKind::precondition,
          "output bound needs nonnegative alpha_max and color_max");
  return std::sqrt(static_cast<double>(grid.entries())) * static_cast<double>(N) * alpha_max *
         color_max;
}

double analytic_output_bound(const DomainBox& domain, std::size_t N, const ImageGrid& grid) {
  domain.validate();
  return analytic_output_bound(domain.alpha_max(), domain.color_max(), N, grid);
}

BlockConstantBreakdown analytic_block_constants(double alpha_max, double color_max,
                                                double cov_eig_lo, const ImageGrid& grid) {
  require(alpha_max >= 0.0 && color_max >= 0.0 && cov_eig_lo > 0.0, ErrorKind::precondition,
          "block constants need alpha_max, color_max >= 0 and cov_eig_lo > 0");
  const double root = std::sqrt(static_cast<double>(grid.entries()));
  BlockConstantBreakdown k;
  // sup_t t e^{-t^2/2} = e^{-1/2}; the whitening factor is 1/sqrt(lambda_lo).
  k.C_x = root * alpha_max * color_max * std::exp(-0.5) / std::sqrt(cov_eig_lo);
  // dk/d(a, b, c) = k (u0^2/2, u0 u1, u1^2/2) has norm <= k ||u||^2 / sqrt(2),
  // ||u||^2 <= q / lambda_lo and sup_q q e^{-q/2} = 2/e; 2/(e sqrt 2) < 1.5/e.
  k.C_Sigma = root * alpha_max * color_max * 1.5 * std::exp(-1.0) / cov_eig_lo;
  k.C_c = root * alpha_max;
  k.C_alpha = root * color_max;
  return k;
}

BlockConstantBreakdown analytic_block_constants(const DomainBox& domain, const ImageGrid& grid) {
  domain.validate();
  return analytic_block_constants(domain.alpha_max(), domain.color_max(), domain.cov_eig_lo, grid);
}

double global_misfit_lipschitz(double B, double G, std::size_t N) {
  require(B >= 0.0 && G >= 0.0 && N >= 1, ErrorKind::precondition,
          "misfit Lipschitz constant needs B, G >= 0 and N >= 1");
  return 2.0 * B * G * std::sqrt(static_cast<double>(N));
}

std::uint64_t domain_hash(const DomainBox& d) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : {d.position_lo, d.position_hi, d.color_lo, d.color_hi, d.alpha_lo, d.alpha_hi,
                   d.cov_eig_lo, d.cov_eig_hi}) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (bits >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

ConstantsReport analytic_constants(const DomainBox& domain, std::size_t N, const ImageGrid& grid) {
  require(N >= 1, ErrorKind::precondition, "constants need N >= 1");
  ConstantsReport r;
  r.operator_name = "gaussian-splat";
  r.grid_id = grid.id();
  r.domain_hash = domain_hash(domain);
  r.N = N;
  r.B = analytic_output_bound(domain, N, grid);
  r.per_block.assign(N, analytic_block_constants(domain, grid));
  r.G = r.per_block.front().G();
  r.L = global_misfit_lipschitz(r.B, r.G, N);
  return r;
}

double domain_vector_bound(const DomainBox& d, std::size_t N) {
  d.validate();
  const double p = std::max(std::abs(d.position_lo), std::abs(d.position_hi));
  // a^2 + b^2 + c^2 = lambda_1^2 + lambda_2^2 - b^2 <= 2 lambda_hi^2
  const double per_block = 2.0 * p * p + 2.0 * d.cov_eig_hi * d.cov_eig_hi +
                           3.0 * d.color_max() * d.color_max() + d.alpha_max() * d.alpha_max();
  return std::sqrt(static_cast<double>(N) * per_block);
}

ConstantsReport linear_oracle_constants(const LinearOracle& oracle, const DomainBox& domain) {
  ConstantsReport r;
  r.operator_name = "linear-oracle";
  r.grid_id = oracle.grid().id();
  r.domain_hash = domain_hash(domain);
  r.N = oracle.blocks();
  const double wnorm =
      Eigen::JacobiSVD<Eigen::MatrixXd>(oracle.weights()).singularValues()(0);
  r.B = wnorm * domain_vector_bound(domain, r.N);
  r.per_block.resize(r.N);
  for (std::size_t i = 0; i < r.N; ++i) {
    // The whole block-column norm is attributed to one group; the sum is what matters.
    r.per_block[i].C_x = oracle.block_column_norm(i);
    r.G = std::max(r.G, r.per_block[i].G());
  }
  r.L = global_misfit_lipschitz(r.B, r.G, r.N);
  return r;
}

namespace {

constexpr std::size_t kChains = 16;

// Returns the ratio for the pair (base, base + delta) or NaN when degenerate.
using RatioFn = std::function<double(const Scene& base, const Eigen::VectorXd& delta)>;

struct ChainResult {
  double supremum = 0.0;
  std::size_t pairs = 0;
  std::size_t skipped = 0;
  std::size_t above = 0;
};

Eigen::VectorXd random_direction(Engine& rng, const std::vector<Eigen::Index>& coords,
                                 Eigen::Index dim) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  double n2 = 0.0;
  while (n2 == 0.0) {
    for (auto c : coords) v[c] = normal(rng);
    n2 = v.squaredNorm();
  }
  return v / std::sqrt(n2);
}

SupremumEstimate search_supremum(const SamplerConfig& sampler, std::size_t trials,
                                 std::uint64_t seed, const std::vector<Eigen::Index>& coords,
                                 double threshold, const RatioFn& ratio_of) {
  require(trials >= 1, ErrorKind::precondition, "Lipschitz estimators need trials >= 1");
  require(!coords.empty(), ErrorKind::precondition, "no coordinates selected for perturbation");
  const auto dim = static_cast<Eigen::Index>(sampler.blocks * kBlockDim);
  const double log_lo = std::log(1e-6);
  const double log_hi = std::log(sampler.domain.width());
  const DomainBox& d = sampler.domain;
  const double pw = d.position_hi - d.position_lo, cw = d.color_hi - d.color_lo;
  const double ew = d.cov_eig_hi - d.cov_eig_lo;
  const std::array<double, kBlockDim> widths{pw, pw, ew, ew, ew, cw, cw, cw, d.alpha_hi - d.alpha_lo};
  std::vector<ChainResult> results(kChains);

  parallel_for(kChains, [&](std::size_t c) {
    const std::size_t steps = trials / kChains + (c < trials % kChains ? 1 : 0);
    if (steps == 0) return;
    Engine rng = make_engine(seed, c);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    ChainResult& out = results[c];

    bool have_best = false;
    Scene best_base;
    Eigen::VectorXd best_dir;
    double best_log_scale = 0.0;
    double best_ratio = -1.0;

    for (std::size_t s = 0; s < steps; ++s) {
      Scene base;
      Eigen::VectorXd dir;
      double log_scale;
      if (!have_best || s % 2 == 0) {
        base = sample_scene(sampler, rng);
        dir = random_direction(rng, coords, dim);
        log_scale = log_lo + (log_hi - log_lo) * unit(rng);
      } else {
        const double tau = 0.5 * (1.0 - static_cast<double>(s) / static_cast<double>(steps)) + 0.02;
        dir = best_dir + tau * random_direction(rng, coords, dim);
        const double n = dir.norm();
        dir = n > 0.0 ? Eigen::VectorXd(dir / n) : best_dir;
        log_scale = std::clamp(best_log_scale + tau * normal(rng), log_lo, log_hi);
        Eigen::VectorXd v = to_vector(best_base);
        for (Eigen::Index k = 0; k < v.size(); ++k)
          v[k] += 0.05 * tau * widths[static_cast<std::size_t>(k) % kBlockDim] * normal(rng);
        base = project_to_domain(from_vector(sampler.domain, v));
        if (sampler.fixed_color)
          for (auto& b : base.blocks) b.color = *sampler.fixed_color;
      }
      const double r = ratio_of(base, std::exp(log_scale) * dir);
      if (std::isnan(r)) {
        ++out.skipped;
        continue;
      }
      ++out.pairs;
      if (r > threshold) ++out.above;
      out.supremum = std::max(out.supremum, r);
      if (r > best_ratio) {
        have_best = true;
        best_ratio = r;
        best_base = std::move(base);
        best_dir = std::move(dir);
        best_log_scale = log_scale;
      }
    }
  });

  SupremumEstimate est;
  for (const auto& r : results) {
    est.supremum = std::max(est.supremum, r.supremum);
    est.pairs += r.pairs;
    est.skipped += r.skipped;
    est.above += r.above;
  }
  return est;
}

std::vector<Eigen::Index> block_coordinates(std::size_t block, unsigned mask) {
  std::vector<Eigen::Index> coords;
  const auto base = static_cast<Eigen::Index>(block * kBlockDim);
  auto add = [&](std::size_t off, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) coords.push_back(base + static_cast<Eigen::Index>(off + k));
  };
  if (mask & parts::position) add(block::position, 2);
  if (mask & parts::covariance) add(block::covariance, 3);
  if (mask & parts::color) add(block::color, 3);
  if (mask & parts::alpha) add(block::alpha, 1);
  return coords;
}

}  // namespace

SupremumEstimate empirical_block_lipschitz(const ForwardOperator& op,
                                           const SamplerConfig& sampler, std::size_t block,
                                           std::size_t trials, std::uint64_t seed,
                                           unsigned part_mask, double threshold) {
  require(block < sampler.blocks, ErrorKind::structure, "block index out of range");
  const auto coords = block_coordinates(block, part_mask);
  return search_supremum(sampler, trials, seed, coords, threshold,
                         [&](const Scene& base, const Eigen::VectorXd& delta) {
                           std::array<double, kBlockDim> d{};
                           for (std::size_t k = 0; k < kBlockDim; ++k)
                             d[k] = delta[static_cast<Eigen::Index>(block * kBlockDim + k)];
                           const Scene moved = perturb_block(base, block, d);
                           const auto a = base.blocks[block].to_array();
                           const auto b = moved.blocks[block].to_array();
                           double den2 = 0.0;
                           for (std::size_t k = 0; k < kBlockDim; ++k)
                             den2 += (a[k] - b[k]) * (a[k] - b[k]);
                           if (den2 == 0.0) return std::numeric_limits<double>::quiet_NaN();
                           const double num = (op.apply(base).values - op.apply(moved).values).norm();
                           return num / std::sqrt(den2);
                         });
}

SupremumEstimate empirical_misfit_lipschitz(const ForwardOperator& op, const Observation& obs,
                                            const SamplerConfig& sampler, std::size_t trials,
                                            std::uint64_t seed, double threshold) {
  require(obs.grid() == op.grid(), ErrorKind::structure,
          "observation grid does not match the operator grid");
  std::vector<Eigen::Index> coords(sampler.blocks * kBlockDim);
  for (std::size_t k = 0; k < coords.size(); ++k) coords[k] = static_cast<Eigen::Index>(k);
  return search_supremum(sampler, trials, seed, coords, threshold,
                         [&](const Scene& base, const Eigen::VectorXd& delta) {
                           const Scene moved = project_to_domain(
                               from_vector(base.domain, to_vector(base) + delta));
                           const double den = d2_distance(base, moved);
                           if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
                           return std::abs(misfit(op, base, obs) - misfit(op, moved, obs)) / den;
                         });
}

}  // namespace gscert
