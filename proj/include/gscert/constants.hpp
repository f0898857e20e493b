// SPDX-License-Identifier: Apache-2.0
#pragma once

// Certified constants of the misfit landscape: output bound B, blockwise
// Lipschitz constants G_i, G = max_i G_i and the misfit Lipschitz constant
// L = 2 B G sqrt(N), together with sampling estimators of the same suprema.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gscert/forward.hpp"
#include "gscert/param_space.hpp"

namespace gscert {

/// Image-norm change per unit change of each parameter group of one block.
struct BlockConstantBreakdown {
  double C_x = 0.0;
  double C_Sigma = 0.0;
  double C_c = 0.0;
  double C_alpha = 0.0;

  double G() const { return C_x + C_Sigma + C_c + C_alpha; }
};

struct ConstantsReport {
  std::string operator_name;
  std::string grid_id;
  std::uint64_t domain_hash = 0;
  std::size_t N = 0;
  double B = 0.0;
  std::vector<BlockConstantBreakdown> per_block;
  double G = 0.0;
  double L = 0.0;
  /// Sampled suprema, one per block; empty until measured.
  std::vector<double> empirical_G;
  std::optional<double> empirical_L;
};

/// sqrt(3M) * N * alpha_max * color_max.
double analytic_output_bound(const DomainBox& domain, std::size_t N, const ImageGrid& grid);
double analytic_output_bound(double alpha_max, double color_max, std::size_t N,
                             const ImageGrid& grid);

/// Per-pixel derivative suprema of the whitened kernel aggregated by sqrt(3M):
///   C_x     = sqrt(3M) a c e^{-1/2} / sqrt(lambda_lo)
///   C_Sigma = sqrt(3M) a c (3/2) e^{-1} / lambda_lo
///   C_c     = sqrt(3M) a
///   C_alpha = sqrt(3M) c
/// with a = alpha_max and c = color_max.
BlockConstantBreakdown analytic_block_constants(const DomainBox& domain, const ImageGrid& grid);
BlockConstantBreakdown analytic_block_constants(double alpha_max, double color_max,
                                                double cov_eig_lo, const ImageGrid& grid);

/// 2 B G sqrt(N).
double global_misfit_lipschitz(double B, double G, std::size_t N);

/// Analytic report for the Gaussian Splatting operator (every block shares G_i).
ConstantsReport analytic_constants(const DomainBox& domain, std::size_t N, const ImageGrid& grid);

/// Linear-oracle analogue: G_i is the spectral norm of block i's columns and
/// B = ||W||_2 * sup ||vec Z|| over the domain.
ConstantsReport linear_oracle_constants(const LinearOracle& oracle, const DomainBox& domain);

/// Largest ||vec Z|| over feasible scenes with N blocks.
double domain_vector_bound(const DomainBox& domain, std::size_t N);

/// FNV-1a over the domain's eight bounds (bit patterns).
std::uint64_t domain_hash(const DomainBox& domain);

inline constexpr double kNoThreshold = std::numeric_limits<double>::infinity();

struct SupremumEstimate {
  double supremum = 0.0;
  std::size_t pairs = 0;    // pairs with a nonzero denominator
  std::size_t skipped = 0;  // degenerate pairs (zero distance after projection)
  std::size_t above = 0;    // pairs whose ratio exceeded the supplied threshold
};

/// Sampled sup of ||A(Z) - A(Z')|| / ||Z_i - Z'_i|| over pairs differing in block
/// `block` only, restricted to the parameter groups in `part_mask`.
///
/// Sixteen independent chains alternate fresh random pairs (log-uniform
/// perturbation scale in [1e-6, domain width]) with local refinements of the
/// best pair found so far. Deterministic in `seed`.
SupremumEstimate empirical_block_lipschitz(const ForwardOperator& op,
                                           const SamplerConfig& sampler, std::size_t block,
                                           std::size_t trials, std::uint64_t seed,
                                           unsigned part_mask = parts::all,
                                           double threshold = kNoThreshold);

/// Sampled sup of |F(Z) - F(Z')| / d2(Z, Z') over general pairs.
SupremumEstimate empirical_misfit_lipschitz(const ForwardOperator& op, const Observation& obs,
                                            const SamplerConfig& sampler, std::size_t trials,
                                            std::uint64_t seed,
                                            double threshold = kNoThreshold);

}  // namespace gscert
