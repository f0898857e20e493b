// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "gscert/param_space.hpp"

namespace gscert {

inline constexpr std::size_t kChannels = 3;

/// W x H pixel grid on the unit screen square. Pixel (row k, column j) is
/// centered at ((j + 0.5) / W, (k + 0.5) / H).
struct ImageGrid {
  std::size_t width = 1;
  std::size_t height = 1;

  ImageGrid() = default;
  ImageGrid(std::size_t w, std::size_t h);

  std::size_t pixels() const { return width * height; }
  std::size_t entries() const { return kChannels * pixels(); }
  std::array<double, 2> pixel_center(std::size_t row, std::size_t col) const;
  std::string id() const;

  bool operator==(const ImageGrid&) const = default;
};

/// Row-major pixels, channels interleaved: index (row * W + col) * 3 + ch.
struct Image {
  ImageGrid grid;
  Eigen::VectorXd values;

  Image() = default;
  Image(const ImageGrid& g, Eigen::VectorXd v);
  static Image zeros(const ImageGrid& g);

  double norm() const { return values.norm(); }
  double at(std::size_t row, std::size_t col, std::size_t ch) const;
};

struct Observation {
  Image y_obs;
  std::optional<std::string> scene_id;
  std::optional<std::uint64_t> noise_seed;

  const ImageGrid& grid() const { return y_obs.grid; }
};

/// A forward map from scenes to images with an analytic Jacobian.
class ForwardOperator {
 public:
  virtual ~ForwardOperator() = default;

  virtual const ImageGrid& grid() const = 0;
  virtual Image apply(const Scene& z) const = 0;
  /// (3M) x (9N) matrix; columns follow the to_vector() layout.
  virtual Eigen::MatrixXd jacobian(const Scene& z) const = 0;
  /// Gradient of ||apply(z) - y||^2 with respect to to_vector(z).
  virtual Eigen::VectorXd misfit_gradient(const Scene& z, const Image& y) const;
  virtual std::string name() const = 0;
};

/// Additive Gaussian Splatting renderer:
///   A(Z)(p) = sum_i alpha_i c_i exp(-1/2 (p - x_i)^T Sigma_i^{-1} (p - x_i)).
/// Projection onto the screen is the identity; there is no kernel cutoff.
class GaussianSplatOperator final : public ForwardOperator {
 public:
  explicit GaussianSplatOperator(const ImageGrid& grid) : grid_(grid) {}

  const ImageGrid& grid() const override { return grid_; }
  Image apply(const Scene& z) const override;
  Eigen::MatrixXd jacobian(const Scene& z) const override;
  Eigen::VectorXd misfit_gradient(const Scene& z, const Image& y) const override;
  std::string name() const override { return "gaussian-splat"; }

 private:
  ImageGrid grid_;
};

/// Exactly analyzable linear map image = W * to_vector(Z), used as ground truth.
class LinearOracle final : public ForwardOperator {
 public:
  LinearOracle(const ImageGrid& grid, Eigen::MatrixXd weights);

  const ImageGrid& grid() const override { return grid_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  std::size_t blocks() const { return static_cast<std::size_t>(weights_.cols()) / kBlockDim; }

  Image apply(const Scene& z) const override;
  Eigen::MatrixXd jacobian(const Scene& z) const override;
  std::string name() const override { return "linear-oracle"; }

  /// Spectral norm of the columns belonging to block i.
  double block_column_norm(std::size_t i) const;
  /// Smallest singular value of W.
  double sigma_min() const;
  /// Every row repeated k times (consecutively) on a grid with k times the pixels.
  LinearOracle replicated(std::size_t k) const;

  /// W = U diag(s) V^T with Haar-random orthogonal U, V and s log-spaced from
  /// sigma_max down to sigma_min. Requires grid.entries() >= 9 * blocks.
  static LinearOracle random(const ImageGrid& grid, std::size_t blocks, double sigma_min,
                             double sigma_max, std::uint64_t seed);

 private:
  ImageGrid grid_;
  Eigen::MatrixXd weights_;
};

Image render(const Scene& z, const ImageGrid& grid);
Image linear_apply(const LinearOracle& oracle, const Scene& z);
Eigen::MatrixXd jacobian(const Scene& z, const ImageGrid& grid);

/// ||rendered - y||^2 over all 3M entries.
double misfit(const Image& rendered, const Image& y);
double misfit(const Scene& z, const Observation& obs);
double misfit(const ForwardOperator& op, const Scene& z, const Observation& obs);
Eigen::VectorXd misfit_gradient(const Scene& z, const Observation& obs);

}  // namespace gscert
