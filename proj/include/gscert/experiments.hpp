// SPDX-License-Identifier: Apache-2.0
#pragma once

// Monte Carlo and sweep harness checking the stability and concentration
// inequalities on synthetic scenes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gscert/bounds.hpp"
#include "gscert/constants.hpp"
#include "gscert/forward.hpp"
#include "gscert/noise.hpp"
#include "gscert/observability.hpp"
#include "gscert/param_space.hpp"

namespace gscert {

/// Clopper-Pearson one-sided upper confidence limit for a binomial proportion.
double binomial_upper_limit(std::size_t successes, std::size_t trials, double confidence = 0.99);

// --- Lipschitz certification ------------------------------------------------

struct BlockCertification {
  std::size_t block = 0;
  double G_i = 0.0;
  SupremumEstimate estimate;
};

struct LipschitzCertification {
  std::vector<BlockCertification> blocks;
  double L = 0.0;
  SupremumEstimate misfit;
  bool passed = false;
};

/// Single-block pairs against G_i for every block and general pairs against L.
LipschitzCertification run_lipschitz_certification(const ForwardOperator& op,
                                                   const ConstantsReport& constants,
                                                   const SamplerConfig& sampler,
                                                   const Observation& obs, std::size_t trials,
                                                   std::uint64_t seed);

// --- Moment identity --------------------------------------------------------

struct MomentReport {
  std::size_t trials = 0;
  double exact_gap = 0.0;
  double sample_mean = 0.0;
  double sample_sd = 0.0;
  double z_score = 0.0;
  bool passed = false;
};

/// Sample mean of F(Z) - F(Z*) over fresh noise against ||A(Z) - A(Z*)||^2;
/// passes when |z| <= 4.
MomentReport run_moment_check(const ForwardOperator& op, const Scene& z, const Scene& z_star,
                              const NoiseModel& noise, std::size_t trials, std::uint64_t seed);

// --- Concentration ----------------------------------------------------------

struct ConcentrationRow {
  double t = 0.0;
  std::size_t exceedances = 0;
  double frequency = 0.0;
  double upper_limit = 0.0;  // one-sided 99%
  double bound = 0.0;        // clamped to [0, 1]
  bool passed = false;
};

struct ConcentrationReport {
  NoiseModel noise;     // the law actually sampled
  NoiseModel declared;  // the law the bound and the centering assume
  std::size_t trials = 0;
  double sigma2 = 0.0;
  double G = 0.0;
  std::size_t N = 0;
  double d = 0.0;
  double K = 0.0;  // G^2 N d^2
  double exact_gap = 0.0;
  double expected_energy = 0.0;
  std::vector<ConcentrationRow> rows;
  bool passed = false;
};

/// `count` log-spaced values spanning [sigma2, 50 sigma2 max(1, K)].
std::vector<double> default_t_grid(double sigma2, double K, std::size_t count = 10);

/// The point at d2 = sqrt(spread / (G^2 N)) from z_star along a random free
/// direction, so that G^2 N d^2 = spread.
Scene concentration_partner(const Scene& z_star, double G, double spread, Gauge gauge,
                            std::uint64_t seed);

/// Exceedance frequency of F(Z) - (gap + E||eta||^2) >= t under `noise`, with
/// the bound and the centering taken from `declared`.
ConcentrationReport run_concentration_check(const ForwardOperator& op, const Scene& z,
                                            const Scene& z_star, const NoiseModel& noise,
                                            const NoiseModel& declared, double G,
                                            std::size_t trials, const std::vector<double>& t_grid,
                                            std::uint64_t seed);

// --- Reconstruction ---------------------------------------------------------

struct PgdResult {
  Scene scene;
  std::vector<double> trace;  // misfit before each step and after the last
};

/// Z <- project(Z - step * grad F(Z)) for `iters` steps; coordinates outside
/// the gauge's free set are held fixed.
PgdResult reconstruct_pgd(const ForwardOperator& op, const Observation& obs, const Scene& init,
                          double step, std::size_t iters, Gauge gauge = Gauge::none);

/// 1 / (2 sigma_max^2) of the free Jacobian at z.
double default_pgd_step(const ForwardOperator& op, const Scene& z, Gauge gauge);

struct TrialRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double eps_eta = 0.0;
  double F_star = 0.0;
  double F_hat = 0.0;
  double d2 = 0.0;
  double misfit_gap = 0.0;
  double expected_gap = 0.0;
  double det_radius = 0.0;
  double t = 0.0;
  double hp_radius = 0.0;
  double confidence = 0.0;
  bool included = false;
  bool det_holds = false;
  bool hp_holds = false;
};

struct BoundValidationConfig {
  Scene z_star;
  NoiseModel noise;                    // law the observations are drawn from
  std::optional<NoiseModel> declared;  // law the bounds assume (default: noise)
  std::size_t trials = 100;
  double delta = 0.05;
  std::optional<double> step;  // default_pgd_step when empty
  std::size_t iters = 200;
  double init_perturbation = 1e-3;
  Gauge gauge = Gauge::none;
  double kappa = 0.0;
  double r0 = 0.0;
  double G = 0.0;
  std::uint64_t seed = 0;
};

struct BoundValidationReport {
  std::vector<TrialRecord> records;
  double step = 0.0;
  std::size_t included = 0;
  std::size_t excluded = 0;
  std::size_t det_violations = 0;
  std::size_t hp_holds = 0;
  double hp_fraction = 0.0;
  double required_fraction = 0.0;
  double max_identity_error = 0.0;  // max |F(Z*) - eps^2| / max(eps^2, tiny)
  bool passed = false;
};

BoundValidationReport run_bound_validation(const ForwardOperator& op,
                                           const BoundValidationConfig& config);

// --- Sweeps -----------------------------------------------------------------

struct LogLogFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log y = a + b log x; needs >= 3 points, x, y > 0.
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SweepResult {
  std::string variable;
  std::vector<double> values;
  std::vector<std::pair<std::string, std::vector<double>>> columns;
  std::string fitted;  // name of the fitted column
  LogLogFit fit;
  /// Resolution sweep: max |lambda_eff / lambda_eff(first) - 1|.
  double lambda_variation = 0.0;
  /// Complexity sweep: every empirical supremum <= formula L.
  bool empirical_within_L = true;

  const std::vector<double>& column(const std::string& name) const;
};

/// sigma_min and lambda_eff of a fixed scene on square grids with the given sides.
SweepResult run_resolution_sweep(const Scene& scene, const std::vector<std::size_t>& sides,
                                 Gauge gauge);
/// The same measurement on an oracle whose rows are replicated k times per entry.
SweepResult run_resolution_sweep(const LinearOracle& oracle, const std::vector<std::size_t>& factors);

/// Formula L with B held at its one-splat value times N, and the sampled misfit
/// Lipschitz supremum, for each N.
SweepResult run_complexity_sweep(const DomainBox& domain, const std::vector<std::size_t>& N_list,
                                 const ImageGrid& grid, std::size_t trials, std::uint64_t seed);

struct TradeoffRow {
  std::size_t M = 0;
  std::size_t N = 0;
  double floor = 0.0;
};

std::vector<TradeoffRow> tradeoff_table(double lambda_eff, double G,
                                        const std::vector<std::size_t>& M_list,
                                        const std::vector<std::size_t>& N_list);

}  // namespace gscert
