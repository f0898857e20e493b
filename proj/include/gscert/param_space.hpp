// SPDX-License-Identifier: Apache-2.0
#pragma once

// Block-structured parameter domain: a scene is an ordered list of planar
// Gaussian splats, each a 9-dimensional block
//   [x0, x1, a, b, c, r, g, b, alpha]
// with the 2x2 screen-space covariance [[a, b], [b, c]] stored by its raw
// entries so that the product metric d2 is plain Euclidean.

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gscert {

inline constexpr std::size_t kBlockDim = 9;

/// Offsets of each parameter group inside a block.
namespace block {
inline constexpr std::size_t position = 0;
inline constexpr std::size_t covariance = 2;
inline constexpr std::size_t color = 5;
inline constexpr std::size_t alpha = 8;
}  // namespace block

/// Bit flags selecting parameter groups of a block.
namespace parts {
inline constexpr unsigned position = 1u;
inline constexpr unsigned covariance = 2u;
inline constexpr unsigned color = 4u;
inline constexpr unsigned alpha = 8u;
inline constexpr unsigned all = 15u;
}  // namespace parts

struct DomainBox {
  double position_lo = 0.0;
  double position_hi = 1.0;
  double color_lo = 0.0;
  double color_hi = 1.0;
  double alpha_lo = 0.0;
  double alpha_hi = 1.0;
  double cov_eig_lo = 1e-3;
  double cov_eig_hi = 1e-1;

  /// Throws Error(precondition) unless every lo < hi and cov_eig_lo > 0.
  void validate() const;

  double alpha_max() const;
  double color_max() const;
  /// Widest coordinate interval; the largest perturbation scale samplers use.
  double width() const;

  bool operator==(const DomainBox&) const = default;
};

struct SplatBlock {
  std::array<double, 2> position{0.5, 0.5};
  std::array<double, 3> cov{0.01, 0.0, 0.01};
  std::array<double, 3> color{0.0, 0.0, 0.0};
  double alpha = 0.0;

  std::array<double, kBlockDim> to_array() const;
  static SplatBlock from_array(std::span<const double, kBlockDim> v);

  bool operator==(const SplatBlock&) const = default;
};

struct Scene {
  DomainBox domain;
  std::vector<SplatBlock> blocks;

  std::size_t size() const { return blocks.size(); }
  std::size_t dimension() const { return kBlockDim * blocks.size(); }

  bool operator==(const Scene&) const = default;
};

/// Eigenvalues (ascending) of the symmetric 2x2 matrix [[a, b], [b, c]].
std::array<double, 2> cov_eigenvalues(const std::array<double, 3>& cov);

/// True when every block lies inside the domain (eigenvalues included).
bool is_feasible(const Scene& z);

/// Throws Error(structure) for N = 0, Error(numeric) for non-finite entries,
/// and Error(precondition) for infeasible blocks.
void validate_scene(const Scene& z);

Eigen::VectorXd to_vector(const Scene& z);
Scene from_vector(const DomainBox& domain, const Eigen::Ref<const Eigen::VectorXd>& v);

/// sqrt(sum_i ||Z_i - Z'_i||^2).
double d2_distance(const Scene& z, const Scene& zp);

/// Clips positions, colors and opacities coordinatewise and clips covariance
/// eigenvalues (eigenvectors unchanged). Feasible blocks are returned
/// untouched, so the map is bit-exact idempotent.
Scene project_to_domain(const Scene& z);

struct SamplerConfig {
  DomainBox domain;
  std::size_t blocks = 1;
  /// Fraction of each interval excluded at both ends (0 = whole domain).
  double interior_margin = 0.0;
  /// Forces every splat to this color when set.
  std::optional<std::array<double, 3>> fixed_color;
};

/// Uniform coordinates; covariances from uniform eigenvalues and a uniform
/// rotation angle. Deterministic in (config, seed).
std::vector<Scene> sample_scenes(const SamplerConfig& config, std::uint64_t seed,
                                 std::size_t count);
std::vector<Scene> sample_scenes(const DomainBox& domain, std::size_t blocks,
                                 std::uint64_t seed, std::size_t count);
/// One draw from the sampler using the caller's engine.
Scene sample_scene(const SamplerConfig& config, std::mt19937_64& rng);

/// Returns z with block `index` (0-based) shifted by delta and projected.
/// All other blocks are copied bit-for-bit.
Scene perturb_block(const Scene& z, std::size_t index,
                    const std::array<double, kBlockDim>& delta);

/// Symmetry fixing used by the identifiability estimators.
///
/// The splat contribution depends on opacity and color only through the
/// product alpha * c, so (c, alpha) -> (c / s, s * alpha) leaves the image
/// unchanged. `opacity` removes the alpha coordinates from the free set.
/// `color` frees only the color coordinates (geometry and opacity fixed).
enum class Gauge { none, opacity, color };

Gauge parse_gauge(const std::string& name);
std::string to_string(Gauge gauge);

/// Indices (into to_vector layout) of the coordinates free under the gauge.
std::vector<Eigen::Index> free_coordinates(std::size_t blocks, Gauge gauge);

}  // namespace gscert
