// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration read from a TOML-style file. Supported syntax: `[table]`
// and `[a.b]` headers, `key = value` pairs, `#` comments, basic and literal
// strings, integers, floats (including inf/nan), booleans and arrays (which
// may span several lines). Inline tables and dates are not supported.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gscert/forward.hpp"
#include "gscert/io.hpp"
#include "gscert/noise.hpp"
#include "gscert/param_space.hpp"

namespace gscert {

/// Parses the TOML subset into a JSON tree; errors carry the line number.
Json parse_toml(const std::string& text);

enum class SceneSource { single, file, random };
enum class ModelKind { gaussian_splat, linear };

struct RunConfig {
  std::optional<std::uint64_t> seed;

  // [scene]
  SceneSource scene_source = SceneSource::single;
  std::string scene_path;
  std::size_t scene_splats = 1;
  double scene_margin = 0.2;

  // [model]
  ModelKind model = ModelKind::gaussian_splat;
  std::size_t linear_blocks = 2;
  double linear_sigma_min = 0.5;
  double linear_sigma_max = 2.0;

  ImageGrid grid{16, 16};
  DomainBox domain;

  // [noise]
  NoiseModel noise{NoiseKind::gaussian, 0.05, std::nullopt};
  std::optional<double> declared_scale;

  // [certify]
  std::size_t lipschitz_trials = 10000;
  double radius_max = 0.05;
  std::size_t growth_samples = 200;
  double kappa_fraction = 0.5;
  std::optional<Gauge> gauge;  // defaults: opacity for gaussian-splat, none for linear

  // [verify]
  std::size_t moment_trials = 10000;
  std::size_t concentration_trials = 10000;
  std::size_t t_values = 10;
  double concentration_spread = 25.0;
  std::size_t bound_trials = 100;
  double delta = 0.05;
  std::optional<double> pgd_step;  // empty = 1 / (2 sigma_max^2)
  std::size_t pgd_iters = 200;
  double init_perturbation = 1e-3;
  std::string certify_report;  // empty = <out>/certify_report.json

  // [sweep]
  std::vector<std::size_t> resolutions{16, 32, 64, 128};
  std::vector<std::size_t> splat_counts{1, 2, 4, 8, 16};
  std::size_t sweep_trials = 1000;

  Gauge effective_gauge() const;
  NoiseModel declared_noise() const;
};

/// Defaults for every field; documented in the CLI help text.
RunConfig default_config();
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// The scene named by the config (single default splat, a file, or a seeded draw).
Scene build_scene(const RunConfig& cfg, std::uint64_t seed);
/// The single splat used when no scene is given.
Scene default_single_splat(const DomainBox& domain = {});

/// Help text listing every key with its default.
std::string config_reference();

}  // namespace gscert
