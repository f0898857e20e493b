// SPDX-License-Identifier: Apache-2.0
#include "gscert/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gscert/error.hpp"
#include "gscert/runtime.hpp"

namespace gscert {

void DomainBox::validate() const {
  auto check = [](double lo, double hi, const char* name) {
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorKind::precondition,
            std::string("domain: ") + name + "_lo must be strictly less than " + name + "_hi");
  };
  check(position_lo, position_hi, "position");
  check(color_lo, color_hi, "color");
  check(alpha_lo, alpha_hi, "alpha");
  check(cov_eig_lo, cov_eig_hi, "cov_eig");
  require(cov_eig_lo > 0.0, ErrorKind::precondition, "domain: cov_eig_lo must be positive");
}

double DomainBox::alpha_max() const { return std::max(std::abs(alpha_lo), std::abs(alpha_hi)); }
double DomainBox::color_max() const { return std::max(std::abs(color_lo), std::abs(color_hi)); }

double DomainBox::width() const {
  return std::max({position_hi - position_lo, color_hi - color_lo, alpha_hi - alpha_lo,
                   cov_eig_hi - cov_eig_lo});
}

std::array<double, kBlockDim> SplatBlock::to_array() const {
  return {position[0], position[1], cov[0], cov[1], cov[2], color[0], color[1], color[2], alpha};
}

SplatBlock SplatBlock::from_array(std::span<const double, kBlockDim> v) {
  SplatBlock b;
  b.position = {v[0], v[1]};
  b.cov = {v[2], v[3], v[4]};
  b.color = {v[5], v[6], v[7]};
  b.alpha = v[8];
  return b;
}

std::array<double, 2> cov_eigenvalues(const std::array<double, 3>& cov) {
  const double a = cov[0], b = cov[1], c = cov[2];
  if (b == 0.0) return {std::min(a, c), std::max(a, c)};
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);
  return {mean - radius, mean + radius};
}

namespace {

bool block_finite(const SplatBlock& b) {
  for (double v : b.to_array())
    if (!std::isfinite(v)) return false;
  return true;
}

bool block_feasible(const SplatBlock& b, const DomainBox& d) {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  for (double p : b.position)
    if (!in(p, d.position_lo, d.position_hi)) return false;
  for (double c : b.color)
    if (!in(c, d.color_lo, d.color_hi)) return false;
  if (!in(b.alpha, d.alpha_lo, d.alpha_hi)) return false;
  const auto eig = cov_eigenvalues(b.cov);
  return eig[0] >= d.cov_eig_lo && eig[1] <= d.cov_eig_hi;
}

std::array<double, 3> assemble_cov(double major, double minor, double angle) {
  const double cs = std::cos(angle), sn = std::sin(angle);
  return {major * cs * cs + minor * sn * sn, (major - minor) * cs * sn,
          major * sn * sn + minor * cs * cs};
}

std::array<double, 3> project_cov(const std::array<double, 3>& cov, const DomainBox& d) {
  const auto eig = cov_eigenvalues(cov);
  if (eig[0] >= d.cov_eig_lo && eig[1] <= d.cov_eig_hi) return cov;
  if (cov[1] == 0.0) {
    return {std::clamp(cov[0], d.cov_eig_lo, d.cov_eig_hi), 0.0,
            std::clamp(cov[2], d.cov_eig_lo, d.cov_eig_hi)};
  }
  // Reassembly rounds at the level of eps * lambda_hi, so clip into a slightly
  // shrunken interval and confirm the result re-evaluates as feasible.
  const double angle = 0.5 * std::atan2(2.0 * cov[1], cov[0] - cov[2]);
  double margin = 64.0 * std::numeric_limits<double>::epsilon() * d.cov_eig_hi;
  for (int attempt = 0; attempt < 8; ++attempt, margin *= 8.0) {
    const double lo = d.cov_eig_lo + margin, hi = d.cov_eig_hi - margin;
    const auto out = assemble_cov(std::clamp(eig[1], lo, hi), std::clamp(eig[0], lo, hi), angle);
    const auto check = cov_eigenvalues(out);
    if (check[0] >= d.cov_eig_lo && check[1] <= d.cov_eig_hi) return out;
  }
  fail(ErrorKind::numeric, "covariance projection did not converge");
}

SplatBlock project_block(const SplatBlock& b, const DomainBox& d) {
  require(block_finite(b), ErrorKind::numeric, "project_to_domain: non-finite block coordinate");
  SplatBlock out = b;
  for (double& p : out.position) p = std::clamp(p, d.position_lo, d.position_hi);
  for (double& c : out.color) c = std::clamp(c, d.color_lo, d.color_hi);
  out.alpha = std::clamp(out.alpha, d.alpha_lo, d.alpha_hi);
  out.cov = project_cov(b.cov, d);
  return out;
}

}  // namespace

bool is_feasible(const Scene& z) {
  if (z.blocks.empty()) return false;
  return std::all_of(z.blocks.begin(), z.blocks.end(), [&](const SplatBlock& b) {
    return block_finite(b) && block_feasible(b, z.domain);
  });
}

void validate_scene(const Scene& z) {
  z.domain.validate();
  require(!z.blocks.empty(), ErrorKind::structure, "scene must contain at least one block");
  for (std::size_t i = 0; i < z.blocks.size(); ++i) {
    require(block_finite(z.blocks[i]), ErrorKind::numeric,
            "block " + std::to_string(i) + " has a non-finite coordinate");
    require(block_feasible(z.blocks[i], z.domain), ErrorKind::precondition,
            "block " + std::to_string(i) + " lies outside the domain");
  }
}

Eigen::VectorXd to_vector(const Scene& z) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(z.dimension()));
  for (std::size_t i = 0; i < z.blocks.size(); ++i) {
    const auto a = z.blocks[i].to_array();
    for (std::size_t k = 0; k < kBlockDim; ++k) v[static_cast<Eigen::Index>(i * kBlockDim + k)] = a[k];
  }
  return v;
}

Scene from_vector(const DomainBox& domain, const Eigen::Ref<const Eigen::VectorXd>& v) {
  require(v.size() % static_cast<Eigen::Index>(kBlockDim) == 0, ErrorKind::structure,
          "parameter vector length must be a multiple of the block dimension");
  Scene z{domain, {}};
  const std::size_t n = static_cast<std::size_t>(v.size()) / kBlockDim;
  z.blocks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, kBlockDim> a{};
    for (std::size_t k = 0; k < kBlockDim; ++k) a[k] = v[static_cast<Eigen::Index>(i * kBlockDim + k)];
    z.blocks.push_back(SplatBlock::from_array(a));
  }
  return z;
}

double d2_distance(const Scene& z, const Scene& zp) {
  require(z.size() == zp.size(), ErrorKind::structure,
          "d2_distance: scenes have different block counts");
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto a = z.blocks[i].to_array();
    const auto b = zp.blocks[i].to_array();
    for (std::size_t k = 0; k < kBlockDim; ++k) {
      const double diff = a[k] - b[k];
      sum += diff * diff;
    }
  }
  return std::sqrt(sum);
}

Scene project_to_domain(const Scene& z) {
  Scene out{z.domain, {}};
  out.blocks.reserve(z.blocks.size());
  for (const auto& b : z.blocks) out.blocks.push_back(project_block(b, z.domain));
  return out;
}

namespace {

void check_sampler(const SamplerConfig& config) {
  config.domain.validate();
  require(config.blocks >= 1, ErrorKind::precondition, "sampler needs at least one block");
  require(config.interior_margin >= 0.0 && config.interior_margin < 0.5, ErrorKind::precondition,
          "interior_margin must lie in [0, 0.5)");
}

Scene draw_scene(const SamplerConfig& config, Engine& rng) {
  const DomainBox& d = config.domain;
  const double m = config.interior_margin;
  auto draw = [m, &rng](double lo, double hi) {
    const double w = hi - lo;
    return std::uniform_real_distribution<double>(lo + m * w, hi - m * w)(rng);
  };
  Scene z{d, {}};
  z.blocks.reserve(config.blocks);
  for (std::size_t i = 0; i < config.blocks; ++i) {
    SplatBlock b;
    for (double& p : b.position) p = draw(d.position_lo, d.position_hi);
    const double e1 = draw(d.cov_eig_lo, d.cov_eig_hi);
    const double e2 = draw(d.cov_eig_lo, d.cov_eig_hi);
    const double angle = std::uniform_real_distribution<double>(0.0, std::numbers::pi)(rng);
    b.cov = assemble_cov(e1, e2, angle);
    for (double& c : b.color) c = draw(d.color_lo, d.color_hi);
    if (config.fixed_color) b.color = *config.fixed_color;
    b.alpha = draw(d.alpha_lo, d.alpha_hi);
    z.blocks.push_back(b);
  }
  return project_to_domain(z);
}

}  // namespace

Scene sample_scene(const SamplerConfig& config, Engine& rng) {
  check_sampler(config);
  return draw_scene(config, rng);
}

std::vector<Scene> sample_scenes(const SamplerConfig& config, std::uint64_t seed,
                                 std::size_t count) {
  check_sampler(config);
  std::vector<Scene> scenes;
  scenes.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Engine rng = make_engine(seed, s);
    scenes.push_back(draw_scene(config, rng));
  }
  return scenes;
}

std::vector<Scene> sample_scenes(const DomainBox& domain, std::size_t blocks,
                                 std::uint64_t seed, std::size_t count) {
  SamplerConfig config;
  config.domain = domain;
  config.blocks = blocks;
  return sample_scenes(config, seed, count);
}

Scene perturb_block(const Scene& z, std::size_t index,
                    const std::array<double, kBlockDim>& delta) {
  require(index < z.size(), ErrorKind::structure,
          "perturb_block: block index " + std::to_string(index) + " out of range");
  Scene out = z;
  auto a = z.blocks[index].to_array();
  for (std::size_t k = 0; k < kBlockDim; ++k) a[k] += delta[k];
  out.blocks[index] = project_block(SplatBlock::from_array(a), z.domain);
  return out;
}

Gauge parse_gauge(const std::string& name) {
  if (name == "none") return Gauge::none;
  if (name == "opacity") return Gauge::opacity;
  if (name == "color") return Gauge::color;
  fail(ErrorKind::config, "unknown gauge '" + name + "' (expected none, opacity or color)");
}

std::string to_string(Gauge gauge) {
  switch (gauge) {
    case Gauge::opacity: return "opacity";
    case Gauge::color: return "color";
    case Gauge::none: break;
  }
  return "none";
}

std::vector<Eigen::Index> free_coordinates(std::size_t blocks, Gauge gauge) {
  std::vector<Eigen::Index> idx;
  idx.reserve(blocks * kBlockDim);
  for (std::size_t i = 0; i < blocks; ++i)
    for (std::size_t k = 0; k < kBlockDim; ++k) {
      if (gauge == Gauge::opacity && k == block::alpha) continue;
      if (gauge == Gauge::color && (k < block::color || k >= block::alpha)) continue;
      idx.push_back(static_cast<Eigen::Index>(i * kBlockDim + k));
    }
  return idx;
}

}  // namespace gscert
