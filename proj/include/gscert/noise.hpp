// SPDX-License-Identifier: Apache-2.0
#pragma once

// Centered, coordinatewise independent sub-Gaussian observation noise.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gscert/forward.hpp"

namespace gscert {

enum class NoiseKind { gaussian, rademacher, uniform };

NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(NoiseKind kind);

struct NoiseModel {
  NoiseKind kind = NoiseKind::gaussian;
  /// Standard deviation (gaussian), magnitude (rademacher) or half-width (uniform).
  double scale = 0.0;
  /// Optional deterministic energy cap B_eta: draws with ||eta|| > B_eta are redrawn.
  std::optional<double> truncation;

  void validate() const;
  /// Sub-Gaussian proxy sigma^2: scale^2 for every kind.
  double variance_proxy() const { return scale * scale; }
  /// True per-coordinate variance (scale^2 / 3 for uniform).
  double coordinate_variance() const;
  /// E ||eta||^2 over `entries` coordinates, ignoring truncation.
  double expected_energy(std::size_t entries) const;
};

struct NoiseRealization {
  Image eta;
  double energy = 0.0;  // ||eta||
  std::uint64_t seed = 0;
  unsigned resamples = 0;
};

/// Fills `out` with independent draws of the model's coordinate law.
void fill_noise(const NoiseModel& model, std::mt19937_64& rng, Eigen::Ref<Eigen::VectorXd> out);

/// 3M coordinates; deterministic in (model, grid, seed).
NoiseRealization draw_noise(const NoiseModel& model, const ImageGrid& grid, std::uint64_t seed);

struct MgfEntry {
  std::size_t direction = 0;
  double lambda = 0.0;
  double ratio = 0.0;  // log(sample MGF) / (sigma^2 lambda^2 / 2)
  double slack = 0.0;  // four Monte Carlo standard errors in ratio units
};

struct MgfCheck {
  double worst_ratio = 0.0;
  bool certified = true;
  std::vector<MgfEntry> entries;
};

/// Compares log E exp(lambda <v, eta>) with sigma^2 lambda^2 / 2 for each unit
/// direction v (noise of dimension v.size()) at lambda * sigma in {0.5, 1, 2}.
MgfCheck mgf_proxy_check(const NoiseModel& model, const std::vector<Eigen::VectorXd>& directions,
                         std::size_t trials, std::uint64_t seed);

}  // namespace gscert
