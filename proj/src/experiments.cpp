// SPDX-License-Identifier: Apache-2.0
#include "gscert/experiments.hpp"

#include <Eigen/SVD>
#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gscert/error.hpp"
#include "gscert/runtime.hpp"

namespace gscert {

double binomial_upper_limit(std::size_t successes, std::size_t trials, double confidence) {
  require(trials >= 1 && successes <= trials, ErrorKind::precondition,
          "binomial limit needs 0 <= successes <= trials, trials >= 1");
  require(confidence > 0.0 && confidence < 1.0, ErrorKind::precondition,
          "confidence must lie in (0, 1)");
  if (successes == trials) return 1.0;
  return boost::math::binomial_distribution<double>::find_upper_bound_on_p(
      static_cast<double>(trials), static_cast<double>(successes), 1.0 - confidence);
}

LipschitzCertification run_lipschitz_certification(const ForwardOperator& op,
                                                   const ConstantsReport& constants,
                                                   const SamplerConfig& sampler,
                                                   const Observation& obs, std::size_t trials,
                                                   std::uint64_t seed) {
  require(constants.per_block.size() == sampler.blocks, ErrorKind::structure,
          "constants report and sampler disagree on the block count");
  LipschitzCertification out;
  out.passed = true;
  for (std::size_t i = 0; i < sampler.blocks; ++i) {
    BlockCertification b;
    b.block = i;
    b.G_i = constants.per_block[i].G();
    b.estimate = empirical_block_lipschitz(op, sampler, i, trials, derive_seed(seed, i),
                                           parts::all, b.G_i);
    out.passed = out.passed && b.estimate.above == 0;
    out.blocks.push_back(b);
  }
  out.L = constants.L;
  out.misfit = empirical_misfit_lipschitz(op, obs, sampler, trials,
                                          derive_seed(seed, sampler.blocks), constants.L);
  out.passed = out.passed && out.misfit.above == 0;
  return out;
}

MomentReport run_moment_check(const ForwardOperator& op, const Scene& z, const Scene& z_star,
                              const NoiseModel& noise, std::size_t trials, std::uint64_t seed) {
  require(trials >= 100, ErrorKind::precondition, "moment check needs at least 100 trials");
  noise.validate();
  const Eigen::VectorXd delta_a = op.apply(z).values - op.apply(z_star).values;
  const double gap = delta_a.squaredNorm();
  std::vector<double> diff(trials);
  parallel_for(trials, [&](std::size_t k) {
    const NoiseRealization eta = draw_noise(noise, op.grid(), derive_seed(seed, k));
    diff[k] = (delta_a - eta.eta.values).squaredNorm() - eta.eta.values.squaredNorm();
  });
  MomentReport r;
  r.trials = trials;
  r.exact_gap = gap;
  const double n = static_cast<double>(trials);
  const auto [lo, hi] = std::minmax_element(diff.begin(), diff.end());
  if (*lo == *hi) {
    r.sample_mean = *lo;
    r.sample_sd = 0.0;
  } else {
    double sum = 0.0;
    for (double v : diff) sum += v;
    r.sample_mean = sum / n;
    double ss = 0.0;
    for (double v : diff) ss += (v - r.sample_mean) * (v - r.sample_mean);
    r.sample_sd = std::sqrt(ss / (n - 1.0));
  }
  if (r.sample_sd > 0.0) {
    r.z_score = (r.sample_mean - gap) / (r.sample_sd / std::sqrt(n));
  } else {
    // Deterministic differences: only summation rounding separates mean and gap.
    const double err = std::abs(r.sample_mean - gap);
    r.z_score = err <= 1e-12 * std::max(1.0, gap) ? 0.0 : std::numeric_limits<double>::infinity();
  }
  r.passed = std::abs(r.z_score) <= 4.0;
  return r;
}

std::vector<double> default_t_grid(double sigma2, double K, std::size_t count) {
  require(sigma2 > 0.0, ErrorKind::precondition, "t grid needs sigma2 > 0");
  require(count >= 2, ErrorKind::precondition, "t grid needs at least two values");
  const double lo = sigma2, hi = 50.0 * sigma2 * std::max(1.0, K);
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k)
    t[k] = lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(count - 1));
  return t;
}

Scene concentration_partner(const Scene& z_star, double G, double spread, Gauge gauge,
                            std::uint64_t seed) {
  require(G > 0.0 && spread > 0.0, ErrorKind::precondition,
          "concentration partner needs G > 0 and spread > 0");
  const double d = std::sqrt(spread / (G * G * static_cast<double>(z_star.size())));
  const auto free = free_coordinates(z_star.size(), gauge);
  Engine rng = make_engine(seed, 0xc0c0);
  std::normal_distribution<double> normal;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(z_star.dimension()));
  double n2 = 0.0;
  while (n2 == 0.0) {
    for (auto c : free) u[c] = normal(rng);
    n2 = u.squaredNorm();
  }
  u /= std::sqrt(n2);
  return project_to_domain(from_vector(z_star.domain, to_vector(z_star) + d * u));
}

ConcentrationReport run_concentration_check(const ForwardOperator& op, const Scene& z,
                                            const Scene& z_star, const NoiseModel& noise,
                                            const NoiseModel& declared, double G,
                                            std::size_t trials, const std::vector<double>& t_grid,
                                            std::uint64_t seed) {
  require(trials >= 1, ErrorKind::precondition, "concentration check needs trials >= 1");
  require(!t_grid.empty(), ErrorKind::precondition, "t grid must not be empty");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    require(t_grid[k] > 0.0, ErrorKind::precondition, "t values must be positive");
    if (k > 0)
      require(t_grid[k] > t_grid[k - 1], ErrorKind::precondition, "t values must be ascending");
  }
  noise.validate();
  declared.validate();

  ConcentrationReport r;
  r.noise = noise;
  r.declared = declared;
  r.trials = trials;
  r.sigma2 = declared.variance_proxy();
  r.G = G;
  r.N = z.size();
  r.d = d2_distance(z, z_star);
  r.K = G * G * static_cast<double>(r.N) * r.d * r.d;
  const Eigen::VectorXd delta_a = op.apply(z).values - op.apply(z_star).values;
  r.exact_gap = delta_a.squaredNorm();
  r.expected_energy = declared.expected_energy(op.grid().entries());
  const double center = r.exact_gap + r.expected_energy;

  std::vector<double> dev(trials);
  parallel_for(trials, [&](std::size_t k) {
    const NoiseRealization eta = draw_noise(noise, op.grid(), derive_seed(seed, k));
    dev[k] = (delta_a - eta.eta.values).squaredNorm() - center;
  });

  r.passed = true;
  for (double t : t_grid) {
    ConcentrationRow row;
    row.t = t;
    row.exceedances = static_cast<std::size_t>(
        std::count_if(dev.begin(), dev.end(), [t](double v) { return v >= t; }));
    row.frequency = static_cast<double>(row.exceedances) / static_cast<double>(trials);
    row.upper_limit = binomial_upper_limit(row.exceedances, trials, 0.99);
    row.bound = concentration_tail(t, r.sigma2, G, r.N, r.d);
    row.passed = row.upper_limit <= row.bound;
    r.passed = r.passed && row.passed;
    r.rows.push_back(row);
  }
  return r;
}

double default_pgd_step(const ForwardOperator& op, const Scene& z, Gauge gauge) {
  const double smax = jacobian_spectrum(op, z, gauge).sigma_max;
  require(smax > 0.0, ErrorKind::precondition, "Jacobian vanishes; no default step exists");
  return 1.0 / (2.0 * smax * smax);
}

PgdResult reconstruct_pgd(const ForwardOperator& op, const Observation& obs, const Scene& init,
                          double step, std::size_t iters, Gauge gauge) {
  require(step >= 0.0 && std::isfinite(step), ErrorKind::precondition,
          "PGD step must be finite and >= 0");
  require(obs.grid() == op.grid(), ErrorKind::structure,
          "observation grid does not match the operator grid");
  std::vector<char> frozen(init.dimension(), 1);
  for (auto c : free_coordinates(init.size(), gauge)) frozen[static_cast<std::size_t>(c)] = 0;

  PgdResult r;
  r.scene = init;
  r.trace.reserve(iters + 1);
  auto diverged = [&](const std::string& what) {
    std::string msg = "PGD diverged (" + what + ") after " + std::to_string(r.trace.size()) +
                      " steps; misfit trace tail:";
    const std::size_t from = r.trace.size() > 5 ? r.trace.size() - 5 : 0;
    for (std::size_t k = from; k < r.trace.size(); ++k) msg += " " + std::to_string(r.trace[k]);
    fail(ErrorKind::numeric, msg);
  };
  for (std::size_t it = 0; it < iters; ++it) {
    const double f = misfit(op, r.scene, obs);
    if (!std::isfinite(f)) diverged("non-finite misfit");
    r.trace.push_back(f);
    if (step == 0.0) continue;
    Eigen::VectorXd g = op.misfit_gradient(r.scene, obs.y_obs);
    if (!g.allFinite()) diverged("non-finite gradient");
    for (Eigen::Index k = 0; k < g.size(); ++k)
      if (frozen[static_cast<std::size_t>(k)]) g[k] = 0.0;
    const Eigen::VectorXd next = to_vector(r.scene) - step * g;
    if (!next.allFinite()) diverged("non-finite iterate");
    r.scene = project_to_domain(from_vector(init.domain, next));
  }
  const double f = misfit(op, r.scene, obs);
  if (!std::isfinite(f)) diverged("non-finite misfit");
  r.trace.push_back(f);
  return r;
}

BoundValidationReport run_bound_validation(const ForwardOperator& op,
                                           const BoundValidationConfig& cfg) {
  require(cfg.kappa > 0.0, ErrorKind::certification,
          "identifiability not certified (kappa_hat = 0); bound validation refuses to run");
  require(cfg.trials >= 1, ErrorKind::precondition, "bound validation needs trials >= 1");
  require(cfg.delta > 0.0 && cfg.delta < 1.0, ErrorKind::precondition, "delta must lie in (0, 1)");
  require(cfg.r0 > 0.0 && cfg.G > 0.0, ErrorKind::precondition,
          "bound validation needs r0 > 0 and G > 0");
  require(cfg.init_perturbation >= 0.0, ErrorKind::precondition,
          "init_perturbation must be >= 0");
  validate_scene(cfg.z_star);
  cfg.noise.validate();

  BoundValidationReport rep;
  rep.step = cfg.step ? *cfg.step : default_pgd_step(op, cfg.z_star, cfg.gauge);
  const Image a_star = op.apply(cfg.z_star);
  const auto free = free_coordinates(cfg.z_star.size(), cfg.gauge);
  const NoiseModel& assumed = cfg.declared ? *cfg.declared : cfg.noise;
  assumed.validate();
  const double sigma2 = assumed.variance_proxy();
  const double energy = assumed.expected_energy(op.grid().entries());
  const std::size_t N = cfg.z_star.size();

  rep.records.resize(cfg.trials);
  std::vector<double> identity_err(cfg.trials, 0.0);
  parallel_for(cfg.trials, [&](std::size_t k) {
    TrialRecord& rec = rep.records[k];
    rec.index = k;
    rec.seed = derive_seed(cfg.seed, k);
    const NoiseRealization eta = draw_noise(cfg.noise, op.grid(), rec.seed);
    Observation obs{Image(op.grid(), a_star.values + eta.eta.values), std::nullopt, rec.seed};

    Engine rng = make_engine(rec.seed, 0x1417);
    std::normal_distribution<double> normal;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.z_star.dimension()));
    double n2 = 0.0;
    while (n2 == 0.0) {
      for (auto c : free) u[c] = normal(rng);
      n2 = u.squaredNorm();
    }
    const Scene init = project_to_domain(from_vector(
        cfg.z_star.domain, to_vector(cfg.z_star) + (cfg.init_perturbation / std::sqrt(n2)) * u));
    const Scene z_hat = reconstruct_pgd(op, obs, init, rep.step, cfg.iters, cfg.gauge).scene;

    rec.eps_eta = eta.energy;
    rec.F_star = misfit(op, cfg.z_star, obs);
    rec.F_hat = misfit(op, z_hat, obs);
    rec.d2 = d2_distance(z_hat, cfg.z_star);
    const double e2 = rec.eps_eta * rec.eps_eta;
    identity_err[k] = std::abs(rec.F_star - e2) / std::max(e2, std::numeric_limits<double>::min());
    rec.misfit_gap = std::max(rec.F_hat - rec.F_star, 0.0);
    const double delta_a2 = (op.apply(z_hat).values - a_star.values).squaredNorm();
    rec.expected_gap = std::max(0.0, delta_a2 + energy - e2);
    rec.included = rec.d2 <= cfg.r0;
    rec.det_radius = det_stability_bound(cfg.kappa, rec.eps_eta, rec.misfit_gap);
    rec.det_holds = rec.d2 <= rec.det_radius;
    rec.t = select_t(cfg.delta, sigma2, cfg.G, N, rec.d2);
    if (rec.t > 0.0) {
      const auto hp = hp_error_bound(cfg.kappa, rec.eps_eta, rec.expected_gap, rec.t, sigma2,
                                     cfg.G, N, rec.d2);
      rec.hp_radius = hp.radius;
      rec.confidence = hp.confidence;
    } else {
      rec.hp_radius = det_stability_bound(cfg.kappa, rec.eps_eta, rec.expected_gap);
      rec.confidence = 1.0;
    }
    rec.hp_holds = rec.d2 <= rec.hp_radius;
  });

  for (std::size_t k = 0; k < cfg.trials; ++k) {
    const TrialRecord& rec = rep.records[k];
    rep.max_identity_error = std::max(rep.max_identity_error, identity_err[k]);
    if (!rec.included) {
      ++rep.excluded;
      continue;
    }
    ++rep.included;
    if (!rec.det_holds) ++rep.det_violations;
    if (rec.hp_holds) ++rep.hp_holds;
  }
  if (rep.included > 0) {
    const double n = static_cast<double>(rep.included);
    rep.hp_fraction = static_cast<double>(rep.hp_holds) / n;
    rep.required_fraction =
        (1.0 - cfg.delta) - 2.0 * std::sqrt(cfg.delta * (1.0 - cfg.delta) / n);
  }
  rep.passed = rep.included >= 1 && rep.det_violations == 0 &&
               rep.hp_fraction >= rep.required_fraction;
  return rep;
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), ErrorKind::structure, "fit needs equally many x and y values");
  require(x.size() >= 3, ErrorKind::precondition, "log-log fit needs at least three points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    require(x[k] > 0.0 && y[k] > 0.0, ErrorKind::precondition,
            "log-log fit needs positive values");
    lx[k] = std::log(x[k]);
    ly[k] = std::log(y[k]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  require(sxx > 0.0, ErrorKind::precondition, "log-log fit needs distinct x values");
  LogLogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = ly[k] - f.intercept - f.slope * lx[k];
    rss += r * r;
  }
  f.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  return f;
}

const std::vector<double>& SweepResult::column(const std::string& name) const {
  for (const auto& c : columns)
    if (c.first == name) return c.second;
  fail(ErrorKind::structure, "sweep has no column '" + name + "'");
}

namespace {

void require_ascending(const std::vector<std::size_t>& v, std::size_t min_size, const char* what) {
  require(v.size() >= min_size, ErrorKind::precondition,
          std::string(what) + " needs at least " + std::to_string(min_size) + " entries");
  for (std::size_t k = 0; k < v.size(); ++k) {
    require(v[k] >= 1, ErrorKind::precondition, std::string(what) + " entries must be >= 1");
    if (k > 0)
      require(v[k] > v[k - 1], ErrorKind::precondition,
              std::string(what) + " must be strictly ascending");
  }
}

double max_relative_spread(const std::vector<double>& v) {
  double worst = 0.0;
  for (double x : v) worst = std::max(worst, std::abs(x / v.front() - 1.0));
  return worst;
}

}  // namespace

SweepResult run_resolution_sweep(const Scene& scene, const std::vector<std::size_t>& sides,
                                 Gauge gauge) {
  require_ascending(sides, 3, "resolution list");
  validate_scene(scene);
  SweepResult r;
  r.variable = "M";
  std::vector<double> smin, lam;
  for (std::size_t s : sides) {
    const ImageGrid grid(s, s);
    const double sm = jacobian_sigma_min(GaussianSplatOperator(grid), scene, gauge);
    r.values.push_back(static_cast<double>(grid.pixels()));
    smin.push_back(sm);
    lam.push_back(estimate_lambda_eff(sm, grid.pixels()));
  }
  r.columns = {{"sigma_min", smin}, {"lambda_eff", lam}};
  r.fitted = "sigma_min";
  r.fit = fit_loglog(r.values, smin);
  r.lambda_variation = max_relative_spread(lam);
  return r;
}

SweepResult run_resolution_sweep(const LinearOracle& oracle,
                                 const std::vector<std::size_t>& factors) {
  require_ascending(factors, 3, "replication list");
  SweepResult r;
  r.variable = "M";
  std::vector<double> smin, lam;
  for (std::size_t k : factors) {
    const LinearOracle rep = oracle.replicated(k);
    const double sm = rep.sigma_min();
    r.values.push_back(static_cast<double>(rep.grid().pixels()));
    smin.push_back(sm);
    lam.push_back(estimate_lambda_eff(sm, rep.grid().pixels()));
  }
  r.columns = {{"sigma_min", smin}, {"lambda_eff", lam}};
  r.fitted = "sigma_min";
  r.fit = fit_loglog(r.values, smin);
  r.lambda_variation = max_relative_spread(lam);
  return r;
}

SweepResult run_complexity_sweep(const DomainBox& domain, const std::vector<std::size_t>& N_list,
                                 const ImageGrid& grid, std::size_t trials, std::uint64_t seed) {
  require_ascending(N_list, 1, "splat-count list");
  const GaussianSplatOperator op(grid);
  const double B1 = analytic_output_bound(domain, 1, grid);
  const double G = analytic_block_constants(domain, grid).G();
  SweepResult r;
  r.variable = "N";
  std::vector<double> Bs, Gs, Ls, ratio, emp;
  for (std::size_t idx = 0; idx < N_list.size(); ++idx) {
    const std::size_t N = N_list[idx];
    const double B = B1 * static_cast<double>(N);
    const double L = global_misfit_lipschitz(B, G, N);
    SamplerConfig sampler;
    sampler.domain = domain;
    sampler.blocks = N;
    const Scene truth = sample_scenes(sampler, derive_seed(seed, 2 * idx), 1).front();
    const Observation obs{op.apply(truth), std::nullopt, std::nullopt};
    const auto sup =
        empirical_misfit_lipschitz(op, obs, sampler, trials, derive_seed(seed, 2 * idx + 1), L);
    r.values.push_back(static_cast<double>(N));
    Bs.push_back(B);
    Gs.push_back(G);
    Ls.push_back(L);
    ratio.push_back(L / (B * G));
    emp.push_back(sup.supremum);
    r.empirical_within_L = r.empirical_within_L && sup.above == 0;
  }
  r.columns = {{"B", Bs}, {"G", Gs}, {"L", Ls}, {"L_over_BG", ratio}, {"empirical_L", emp}};
  r.fitted = "L_over_BG";
  if (r.values.size() >= 3) {
    r.fit = fit_loglog(r.values, ratio);
  } else if (r.values.size() == 2) {
    r.fit.slope = std::log(ratio[1] / ratio[0]) / std::log(r.values[1] / r.values[0]);
  } else {
    r.fit.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

std::vector<TradeoffRow> tradeoff_table(double lambda_eff, double G,
                                        const std::vector<std::size_t>& M_list,
                                        const std::vector<std::size_t>& N_list) {
  require(!M_list.empty() && !N_list.empty(), ErrorKind::precondition,
          "tradeoff table needs nonempty M and N lists");
  std::vector<TradeoffRow> rows;
  for (std::size_t M : M_list)
    for (std::size_t N : N_list) rows.push_back({M, N, tradeoff_floor(lambda_eff, G, M, N)});
  return rows;
}

}  // namespace gscert
