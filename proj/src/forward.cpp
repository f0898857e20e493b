// SPDX-License-Identifier: Apache-2.0
#include "gscert/forward.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <random>

#include "gscert/error.hpp"
#include "gscert/runtime.hpp"

namespace gscert {

ImageGrid::ImageGrid(std::size_t w, std::size_t h) : width(w), height(h) {
  require(w >= 1 && h >= 1, ErrorKind::precondition, "image grid needs W, H >= 1");
}

std::array<double, 2> ImageGrid::pixel_center(std::size_t row, std::size_t col) const {
  return {(static_cast<double>(col) + 0.5) / static_cast<double>(width),
          (static_cast<double>(row) + 0.5) / static_cast<double>(height)};
}

std::string ImageGrid::id() const { return std::to_string(width) + "x" + std::to_string(height); }

Image::Image(const ImageGrid& g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
  require(values.size() == static_cast<Eigen::Index>(grid.entries()), ErrorKind::structure,
          "image size does not match grid " + grid.id());
}

Image Image::zeros(const ImageGrid& g) {
  return Image(g, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.entries())));
}

double Image::at(std::size_t row, std::size_t col, std::size_t ch) const {
  return values[static_cast<Eigen::Index>((row * grid.width + col) * kChannels + ch)];
}

Eigen::VectorXd ForwardOperator::misfit_gradient(const Scene& z, const Image& y) const {
  const Image a = apply(z);
  require(a.grid == y.grid, ErrorKind::structure, "misfit_gradient: grid mismatch");
  return 2.0 * jacobian(z).transpose() * (a.values - y.values);
}

namespace {

// Per-splat quantities reused across all pixels.
struct SplatKernel {
  double x0, x1;
  double ia, ib, ic;  // entries of Sigma^{-1}
  std::array<double, 3> color;
  double alpha;

  explicit SplatKernel(const SplatBlock& b) {
    const double a = b.cov[0], off = b.cov[1], c = b.cov[2];
    const double det = a * c - off * off;
    require(std::isfinite(det) && det > 0.0 && a > 0.0, ErrorKind::numeric,
            "render: covariance is not positive definite");
    x0 = b.position[0];
    x1 = b.position[1];
    ia = c / det;
    ib = -off / det;
    ic = a / det;
    color = b.color;
    alpha = b.alpha;
  }

  // Returns the kernel value and writes u = Sigma^{-1} (p - x).
  double eval(const std::array<double, 2>& p, double& u0, double& u1) const {
    const double d0 = p[0] - x0, d1 = p[1] - x1;
    u0 = ia * d0 + ib * d1;
    u1 = ib * d0 + ic * d1;
    return std::exp(-0.5 * (d0 * u0 + d1 * u1));
  }
};

std::vector<SplatKernel> kernels_of(const Scene& z) {
  require(!z.blocks.empty(), ErrorKind::structure, "scene has no blocks");
  std::vector<SplatKernel> ks;
  ks.reserve(z.size());
  for (const auto& b : z.blocks) ks.emplace_back(b);
  return ks;
}

}  // namespace

Image GaussianSplatOperator::apply(const Scene& z) const {
  const auto ks = kernels_of(z);
  Image out = Image::zeros(grid_);
  double* v = out.values.data();
  for (std::size_t row = 0; row < grid_.height; ++row) {
    for (std::size_t col = 0; col < grid_.width; ++col) {
      const auto p = grid_.pixel_center(row, col);
      double acc[kChannels] = {0.0, 0.0, 0.0};
      for (const auto& k : ks) {
        double u0, u1;
        const double w = k.alpha * k.eval(p, u0, u1);
        for (std::size_t ch = 0; ch < kChannels; ++ch) acc[ch] += w * k.color[ch];
      }
      double* px = v + (row * grid_.width + col) * kChannels;
      for (std::size_t ch = 0; ch < kChannels; ++ch) px[ch] = acc[ch];
    }
  }
  return out;
}

Eigen::MatrixXd GaussianSplatOperator::jacobian(const Scene& z) const {
  const auto ks = kernels_of(z);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid_.entries()),
                                              static_cast<Eigen::Index>(z.dimension()));
  for (std::size_t row = 0; row < grid_.height; ++row) {
    for (std::size_t col = 0; col < grid_.width; ++col) {
      const auto p = grid_.pixel_center(row, col);
      const auto r0 = static_cast<Eigen::Index>((row * grid_.width + col) * kChannels);
      for (std::size_t i = 0; i < ks.size(); ++i) {
        const auto& k = ks[i];
        double u0, u1;
        const double kv = k.eval(p, u0, u1);
        const auto c0 = static_cast<Eigen::Index>(i * kBlockDim);
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
          const auto r = r0 + static_cast<Eigen::Index>(ch);
          const double ack = k.alpha * k.color[ch] * kv;
          jac(r, c0 + 0) = ack * u0;
          jac(r, c0 + 1) = ack * u1;
          jac(r, c0 + 2) = 0.5 * ack * u0 * u0;
          jac(r, c0 + 3) = ack * u0 * u1;
          jac(r, c0 + 4) = 0.5 * ack * u1 * u1;
          jac(r, c0 + 5 + static_cast<Eigen::Index>(ch)) = k.alpha * kv;
          jac(r, c0 + 8) = k.color[ch] * kv;
        }
      }
    }
  }
  return jac;
}

Eigen::VectorXd GaussianSplatOperator::misfit_gradient(const Scene& z, const Image& y) const {
  require(y.grid == grid_, ErrorKind::structure, "misfit_gradient: grid mismatch");
  const auto ks = kernels_of(z);
  const Image a = apply(z);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(z.dimension()));
  for (std::size_t row = 0; row < grid_.height; ++row) {
    for (std::size_t col = 0; col < grid_.width; ++col) {
      const auto p = grid_.pixel_center(row, col);
      const auto base = static_cast<Eigen::Index>((row * grid_.width + col) * kChannels);
      double res[kChannels];
      for (std::size_t ch = 0; ch < kChannels; ++ch) {
        const auto e = base + static_cast<Eigen::Index>(ch);
        res[ch] = a.values[e] - y.values[e];
      }
      for (std::size_t i = 0; i < ks.size(); ++i) {
        const auto& k = ks[i];
        double u0, u1;
        const double kv = k.eval(p, u0, u1);
        const double s = k.color[0] * res[0] + k.color[1] * res[1] + k.color[2] * res[2];
        const double as = 2.0 * k.alpha * s * kv;
        const auto c0 = static_cast<Eigen::Index>(i * kBlockDim);
        g[c0 + 0] += as * u0;
        g[c0 + 1] += as * u1;
        g[c0 + 2] += 0.5 * as * u0 * u0;
        g[c0 + 3] += as * u0 * u1;
        g[c0 + 4] += 0.5 * as * u1 * u1;
        for (std::size_t ch = 0; ch < kChannels; ++ch)
          g[c0 + 5 + static_cast<Eigen::Index>(ch)] += 2.0 * k.alpha * kv * res[ch];
        g[c0 + 8] += 2.0 * s * kv;
      }
    }
  }
  return g;
}

LinearOracle::LinearOracle(const ImageGrid& grid, Eigen::MatrixXd weights)
    : grid_(grid), weights_(std::move(weights)) {
  require(weights_.rows() == static_cast<Eigen::Index>(grid_.entries()), ErrorKind::structure,
          "linear oracle rows must equal 3M for grid " + grid_.id());
  require(weights_.cols() > 0 && weights_.cols() % static_cast<Eigen::Index>(kBlockDim) == 0,
          ErrorKind::structure, "linear oracle columns must be a positive multiple of 9");
  require(weights_.allFinite(), ErrorKind::numeric, "linear oracle has non-finite weights");
}

Image LinearOracle::apply(const Scene& z) const {
  require(static_cast<Eigen::Index>(z.dimension()) == weights_.cols(), ErrorKind::structure,
          "linear oracle: scene dimension does not match weight columns");
  return Image(grid_, weights_ * to_vector(z));
}

Eigen::MatrixXd LinearOracle::jacobian(const Scene& z) const {
  require(static_cast<Eigen::Index>(z.dimension()) == weights_.cols(), ErrorKind::structure,
          "linear oracle: scene dimension does not match weight columns");
  return weights_;
}

double LinearOracle::block_column_norm(std::size_t i) const {
  require(i < blocks(), ErrorKind::structure, "block index out of range");
  const Eigen::MatrixXd cols =
      weights_.middleCols(static_cast<Eigen::Index>(i * kBlockDim), kBlockDim);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(cols).singularValues()(0);
}

double LinearOracle::sigma_min() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(weights_);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

LinearOracle LinearOracle::replicated(std::size_t k) const {
  require(k >= 1, ErrorKind::precondition, "replication factor must be >= 1");
  // k copies of each pixel along the width keep the 3-channel row layout intact.
  ImageGrid g(grid_.width * k, grid_.height);
  Eigen::MatrixXd w(weights_.rows() * static_cast<Eigen::Index>(k), weights_.cols());
  const auto kk = static_cast<Eigen::Index>(k);
  const auto ch = static_cast<Eigen::Index>(kChannels);
  for (Eigen::Index px = 0; px < weights_.rows() / ch; ++px)
    for (Eigen::Index rep = 0; rep < kk; ++rep)
      w.middleRows((px * kk + rep) * ch, ch) = weights_.middleRows(px * ch, ch);
  return LinearOracle(g, std::move(w));
}

LinearOracle LinearOracle::random(const ImageGrid& grid, std::size_t blocks, double sigma_min,
                                  double sigma_max, std::uint64_t seed) {
  const auto rows = static_cast<Eigen::Index>(grid.entries());
  const auto cols = static_cast<Eigen::Index>(blocks * kBlockDim);
  require(blocks >= 1 && rows >= cols, ErrorKind::precondition,
          "random linear oracle needs 3M >= 9N");
  require(sigma_min > 0.0 && sigma_max >= sigma_min, ErrorKind::precondition,
          "random linear oracle needs 0 < sigma_min <= sigma_max");
  Engine rng = make_engine(seed, 0x11ea7);
  std::normal_distribution<double> normal;
  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
  };
  Eigen::HouseholderQR<Eigen::MatrixXd> qu(gaussian(rows, cols));
  const Eigen::MatrixXd u = qu.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXd> qv(gaussian(cols, cols));
  const Eigen::MatrixXd v = qv.householderQ() * Eigen::MatrixXd::Identity(cols, cols);
  Eigen::VectorXd s(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double frac = cols == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(cols - 1);
    s[j] = sigma_max * std::pow(sigma_min / sigma_max, frac);
  }
  return LinearOracle(grid, u * s.asDiagonal() * v.transpose());
}

Image render(const Scene& z, const ImageGrid& grid) { return GaussianSplatOperator(grid).apply(z); }

Image linear_apply(const LinearOracle& oracle, const Scene& z) { return oracle.apply(z); }

Eigen::MatrixXd jacobian(const Scene& z, const ImageGrid& grid) {
  return GaussianSplatOperator(grid).jacobian(z);
}

double misfit(const Image& rendered, const Image& y) {
  require(rendered.grid == y.grid, ErrorKind::structure,
          "misfit: grid " + rendered.grid.id() + " does not match observation grid " + y.grid.id());
  return (rendered.values - y.values).squaredNorm();
}

double misfit(const Scene& z, const Observation& obs) {
  return misfit(render(z, obs.grid()), obs.y_obs);
}

double misfit(const ForwardOperator& op, const Scene& z, const Observation& obs) {
  return misfit(op.apply(z), obs.y_obs);
}

Eigen::VectorXd misfit_gradient(const Scene& z, const Observation& obs) {
  return GaussianSplatOperator(obs.grid()).misfit_gradient(z, obs.y_obs);
}

}  // namespace gscert
