// SPDX-License-Identifier: Apache-2.0
#include "gscert/commands.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <ostream>

#include "gscert/bounds.hpp"
#include "gscert/config.hpp"
#include "gscert/constants.hpp"
#include "gscert/experiments.hpp"
#include "gscert/forward.hpp"
#include "gscert/io.hpp"
#include "gscert/noise.hpp"
#include "gscert/observability.hpp"
#include "gscert/runtime.hpp"

namespace gscert {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::structure:
    case ErrorKind::precondition:
    case ErrorKind::io:
    case ErrorKind::config: return 2;
    case ErrorKind::certification: return 3;
    case ErrorKind::verification: return 4;
    case ErrorKind::numeric: return 1;
  }
  return 1;
}

namespace {

// Sub-streams of the run seed.
enum Stream : std::uint64_t {
  kLipschitz = 1,
  kGrowth = 2,
  kCertifyNoise = 3,
  kLinearOracle = 5,
  kPartner = 10,
  kMoment = 11,
  kConcentration = 12,
  kBoundTrials = 13,
  kComplexity = 20,
};

struct Context {
  RunConfig cfg;
  std::string config_text;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct Problem {
  Scene z_star;
  std::unique_ptr<ForwardOperator> op;
  const LinearOracle* oracle = nullptr;
  ConstantsReport constants;
  Gauge gauge = Gauge::none;
  std::string scene_hash;
};

Context make_context(const CommandOptions& opt) {
  Context c;
  if (!opt.config_path.empty()) {
    c.config_text = read_text(opt.config_path);
    c.cfg = parse_config(c.config_text);
  } else {
    c.cfg = default_config();
  }
  if (opt.seed) c.cfg.seed = opt.seed;
  require(c.cfg.seed.has_value(), ErrorKind::config,
          "no seed given: set `seed` in the config or pass --seed");
  c.seed = *c.cfg.seed;
  set_thread_limit(opt.threads);
  c.out = opt.out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(opt.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(c.out, ec);
  require(!ec && std::filesystem::is_directory(c.out), ErrorKind::io,
          "cannot create output directory '" + c.out.string() + "'");
  return c;
}

Problem make_problem(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  Problem p;
  p.gauge = cfg.effective_gauge();
  if (cfg.model == ModelKind::linear) {
    RunConfig scfg = cfg;
    if (scfg.scene_source == SceneSource::single) scfg.scene_source = SceneSource::random;
    p.z_star = build_scene(scfg, ctx.seed);
    require(p.z_star.size() == cfg.linear_blocks, ErrorKind::config,
            "scene block count does not match model.linear_blocks");
    auto oracle = std::make_unique<LinearOracle>(LinearOracle::random(
        cfg.grid, cfg.linear_blocks, cfg.linear_sigma_min, cfg.linear_sigma_max,
        derive_seed(ctx.seed, kLinearOracle)));
    p.oracle = oracle.get();
    p.constants = linear_oracle_constants(*oracle, cfg.domain);
    p.op = std::move(oracle);
  } else {
    p.z_star = build_scene(cfg, ctx.seed);
    p.op = std::make_unique<GaussianSplatOperator>(cfg.grid);
    p.constants = analytic_constants(p.z_star.domain, p.z_star.size(), cfg.grid);
  }
  p.scene_hash = hex64(fnv1a(to_json(p.z_star).dump() + "|" + p.op->name() + "|" +
                             cfg.grid.id() + "|" + to_string(p.gauge)));
  return p;
}

void write_manifest(const Context& ctx, const std::string& command,
                    const std::vector<std::string>& files) {
  Json j{{"tool", "gscert"},
         {"version", kVersion},
         {"command", command},
         {"config_hash", hex64(fnv1a(ctx.config_text))},
         {"seed", ctx.seed},
         {"outputs", files}};
  write_text((ctx.out / (command + "_manifest.json")).string(), dump(j));
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(6) << v;
  return ss.str();
}

template <typename Body>
int guarded(const CommandOptions& opt, std::ostream& err, Body&& body) {
  try {
    return body(make_context(opt));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int cmd_render(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(opt, err, [&](const Context& ctx) {
    const Problem p = make_problem(ctx);
    const Image img = render(p.z_star, ctx.cfg.grid);
    const double B = analytic_output_bound(p.z_star.domain, p.z_star.size(), ctx.cfg.grid);
    write_ppm((ctx.out / "render.ppm").string(), img);
    write_image_csv((ctx.out / "render.csv").string(), img);
    write_manifest(ctx, "render", {"render.ppm", "render.csv"});
    out << "grid          " << ctx.cfg.grid.id() << "\n"
        << "splats        " << p.z_star.size() << "\n"
        << "||A(Z)||      " << format_double(img.norm()) << "\n"
        << "analytic B    " << format_double(B) << "\n";
    require(img.norm() <= B, ErrorKind::certification, "rendered norm exceeds the analytic bound B");
    return 0;
  });
}

int cmd_certify(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(opt, err, [&](const Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    Problem p = make_problem(ctx);
    require(cfg.lipschitz_trials >= 1, ErrorKind::precondition, "certify.lipschitz_trials must be >= 1");
    require(cfg.growth_samples >= 1, ErrorKind::precondition, "certify.growth_samples must be >= 1");

    const NoiseRealization eta = draw_noise(cfg.noise, cfg.grid, derive_seed(ctx.seed, kCertifyNoise));
    const Observation obs{Image(cfg.grid, p.op->apply(p.z_star).values + eta.eta.values),
                          std::nullopt, derive_seed(ctx.seed, kCertifyNoise)};
    SamplerConfig sampler;
    sampler.domain = p.z_star.domain;
    sampler.blocks = p.z_star.size();
    const LipschitzCertification lip = run_lipschitz_certification(
        *p.op, p.constants, sampler, obs, cfg.lipschitz_trials, derive_seed(ctx.seed, kLipschitz));
    for (const auto& b : lip.blocks) p.constants.empirical_G.push_back(b.estimate.supremum);
    p.constants.empirical_L = lip.misfit.supremum;

    const StabilityEstimate stab =
        estimate_stability(*p.op, p.z_star, cfg.kappa_fraction, cfg.growth_samples,
                           derive_seed(ctx.seed, kGrowth), cfg.radius_max, p.gauge);

    Json report{{"tool", "gscert"},
                {"command", "certify"},
                {"version", kVersion},
                {"seed", ctx.seed},
                {"scene_hash", p.scene_hash},
                {"scene", to_json(p.z_star)},
                {"constants", to_json(p.constants)},
                {"lipschitz", to_json(lip)},
                {"stability", to_json(stab)}};

    bool oracle_ok = true;
    if (p.oracle) {
      // Closed forms of the linear oracle: block-column norms and the smallest singular value.
      Json checks = Json::array();
      auto check = [&](const std::string& name, double measured, double exact, double tol) {
        const double rel = std::abs(measured / exact - 1.0);
        const bool ok = rel <= tol;
        oracle_ok = oracle_ok && ok;
        checks.push_back(Json{{"quantity", name},
                              {"measured", measured},
                              {"closed_form", exact},
                              {"relative_error", rel},
                              {"tolerance", tol},
                              {"passed", ok}});
      };
      for (std::size_t i = 0; i < p.oracle->blocks(); ++i)
        check("G_" + std::to_string(i), lip.blocks[i].estimate.supremum,
              p.oracle->block_column_norm(i), 0.02);
      check("sigma_min", stab.sigma_min, cfg.linear_sigma_min, 0.02);
      check("kappa_hat", stab.kappa_hat, cfg.linear_sigma_min, 0.02);
      check("lambda_eff", stab.lambda_eff,
            cfg.linear_sigma_min / std::sqrt(static_cast<double>(cfg.grid.pixels())), 0.02);
      check("r0_hat", stab.r0_hat, cfg.radius_max, 0.0);
      report["oracle_checks"] = checks;
    }
    const bool certified = stab.certified && lip.passed && oracle_ok;
    report["certified"] = certified;
    write_text((ctx.out / "certify_report.json").string(), dump(report));
    write_manifest(ctx, "certify", {"certify_report.json"});

    out << "operator      " << p.op->name() << "  grid " << cfg.grid.id() << "  N "
        << p.z_star.size() << "  gauge " << to_string(p.gauge) << "\n"
        << "B             " << fmt(p.constants.B) << "\n"
        << "G             " << fmt(p.constants.G) << "\n"
        << "L             " << fmt(p.constants.L) << "\n";
    for (const auto& b : lip.blocks)
      out << "block " << b.block << "       sup " << fmt(b.estimate.supremum) << " <= G_i "
          << fmt(b.G_i) << "  violations " << b.estimate.above << "\n";
    out << "misfit        sup " << fmt(lip.misfit.supremum) << " <= L  violations "
        << lip.misfit.above << "\n"
        << "sigma_min     " << fmt(stab.sigma_min) << "\n"
        << "lambda_eff    " << fmt(stab.lambda_eff) << "\n"
        << "kappa_hat     " << fmt(stab.kappa_hat) << "\n"
        << "r0_hat        " << fmt(stab.r0_hat) << "\n";
    if (!stab.certified) {
      err << "identifiability not certified (kappa_hat = " << format_double(stab.kappa_hat)
          << ")\n";
      return 3;
    }
    if (!lip.passed) {
      err << "Lipschitz certification failed: sampled ratios exceed the analytic constants\n";
      return 3;
    }
    if (!oracle_ok) {
      err << "linear-oracle closed-form checks failed\n";
      return 3;
    }
    out << "certified\n";
    return 0;
  });
}

int cmd_verify(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(opt, err, [&](const Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const Problem p = make_problem(ctx);
    require(cfg.moment_trials >= 1, ErrorKind::precondition, "verify.moment_trials must be >= 1");
    require(cfg.concentration_trials >= 1, ErrorKind::precondition,
            "verify.concentration_trials must be >= 1");
    require(cfg.bound_trials >= 1, ErrorKind::precondition, "verify.bound_trials must be >= 1");
    require(cfg.t_values >= 2, ErrorKind::precondition, "verify.t_values must be >= 2");

    const std::string report_path = cfg.certify_report.empty()
                                        ? (ctx.out / "certify_report.json").string()
                                        : cfg.certify_report;
    require(std::filesystem::exists(report_path), ErrorKind::io,
            "certification report '" + report_path + "' not found; run certify first");
    Json cert;
    try {
      cert = Json::parse(read_text(report_path));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::io, "certification report '" + report_path + "' is not valid JSON");
    }
    require(cert.value("scene_hash", std::string()) == p.scene_hash, ErrorKind::config,
            "certification report was produced for a different scene, grid, model or gauge");
    require(cert.value("certified", false), ErrorKind::certification,
            "certification report is not certified; verification refuses to run");
    const Json& st = cert.at("stability");
    const double kappa = st.at("kappa_hat").get<double>();
    const double r0 = st.at("r0_hat").get<double>();
    const double lambda_eff = st.at("lambda_eff").get<double>();
    const double G = cert.at("constants").at("G").get<double>();
    const double L = cert.at("constants").at("L").get<double>();

    const NoiseModel declared = cfg.declared_noise();
    const std::size_t N = p.z_star.size();
    const Scene partner = concentration_partner(p.z_star, G, cfg.concentration_spread, p.gauge,
                                                derive_seed(ctx.seed, kPartner));
    const MomentReport moment = run_moment_check(*p.op, partner, p.z_star, cfg.noise,
                                                 cfg.moment_trials, derive_seed(ctx.seed, kMoment));
    const double d_pair = d2_distance(partner, p.z_star);
    const double K = G * G * static_cast<double>(N) * d_pair * d_pair;
    const auto t_grid = default_t_grid(declared.variance_proxy(), K, cfg.t_values);
    const ConcentrationReport conc =
        run_concentration_check(*p.op, partner, p.z_star, cfg.noise, declared, G,
                                cfg.concentration_trials, t_grid,
                                derive_seed(ctx.seed, kConcentration));

    BoundValidationConfig bv;
    bv.z_star = p.z_star;
    bv.noise = cfg.noise;
    bv.declared = declared;
    bv.trials = cfg.bound_trials;
    bv.delta = cfg.delta;
    bv.step = cfg.pgd_step;
    bv.iters = cfg.pgd_iters;
    bv.init_perturbation = cfg.init_perturbation;
    bv.gauge = p.gauge;
    bv.kappa = kappa;
    bv.r0 = r0;
    bv.G = G;
    bv.seed = derive_seed(ctx.seed, kBoundTrials);
    const BoundValidationReport bounds = run_bound_validation(*p.op, bv);

    const TrialRecord& first = bounds.records.front();
    BoundInputs in;
    in.kappa = kappa;
    in.eps_eta = first.eps_eta;
    in.misfit_gap = first.misfit_gap;
    in.expected_gap = first.expected_gap;
    in.L = L;
    in.sigma2 = declared.variance_proxy();
    in.G = G;
    in.N = N;
    in.M = cfg.grid.pixels();
    in.d = first.d2;
    in.delta = cfg.delta;
    in.lambda_eff = lambda_eff;
    const BoundReport first_bounds = evaluate_bounds(in);

    const bool passed = moment.passed && conc.passed && bounds.passed;
    Json report{{"tool", "gscert"},
                {"command", "verify"},
                {"version", kVersion},
                {"seed", ctx.seed},
                {"scene_hash", p.scene_hash},
                {"certified_inputs",
                 Json{{"kappa_hat", kappa}, {"r0_hat", r0}, {"G", G}, {"L", L},
                      {"lambda_eff", lambda_eff}}},
                {"moment", to_json(moment)},
                {"concentration", to_json(conc)},
                {"bound_validation", to_json(bounds)},
                {"bounds_first_trial", to_json(first_bounds)},
                {"passed", passed}};
    write_text((ctx.out / "verify_report.json").string(), dump(report));
    write_text((ctx.out / "trials.csv").string(), trials_csv(bounds.records));
    write_manifest(ctx, "verify", {"verify_report.json", "trials.csv"});

    out << "moment        z = " << fmt(moment.z_score) << (moment.passed ? "  pass" : "  FAIL")
        << "\n"
        << "concentration " << conc.rows.size() << " t values, K = " << fmt(conc.K)
        << (conc.passed ? "  pass" : "  FAIL") << "\n";
    for (const auto& row : conc.rows)
      out << "  t " << std::setw(12) << fmt(row.t) << "  freq " << std::setw(10)
          << fmt(row.frequency) << "  upper99 " << std::setw(10) << fmt(row.upper_limit)
          << "  bound " << std::setw(10) << fmt(row.bound) << (row.passed ? "" : "  FAIL") << "\n";
    out << "bounds        included " << bounds.included << "  excluded " << bounds.excluded
        << "  det violations " << bounds.det_violations << "  hp coverage "
        << fmt(bounds.hp_fraction) << " (need " << fmt(bounds.required_fraction) << ")"
        << (bounds.passed ? "  pass" : "  FAIL") << "\n";
    if (!passed) {
      err << "verification failed\n";
      return 4;
    }
    out << "verified\n";
    return 0;
  });
}

int cmd_sweep(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(opt, err, [&](const Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const Problem p = make_problem(ctx);
    require(cfg.sweep_trials >= 1, ErrorKind::precondition, "sweep.trials must be >= 1");

    SweepResult res;
    if (p.oracle) {
      require(!cfg.resolutions.empty(), ErrorKind::precondition, "sweep.resolutions is empty");
      std::vector<std::size_t> factors;
      const std::size_t s0 = cfg.resolutions.front();
      for (std::size_t s : cfg.resolutions) {
        require(s % s0 == 0, ErrorKind::precondition,
                "linear-oracle sweeps need resolutions that are multiples of the first");
        factors.push_back((s / s0) * (s / s0));
      }
      const LinearOracle base = LinearOracle::random(
          ImageGrid(s0, s0), cfg.linear_blocks, cfg.linear_sigma_min, cfg.linear_sigma_max,
          derive_seed(ctx.seed, kLinearOracle));
      res = run_resolution_sweep(base, factors);
    } else {
      res = run_resolution_sweep(p.z_star, cfg.resolutions, p.gauge);
    }
    const SweepResult cx = run_complexity_sweep(p.z_star.domain, cfg.splat_counts, cfg.grid,
                                                cfg.sweep_trials, derive_seed(ctx.seed, kComplexity));
    const double lambda_eff = estimate_lambda_eff(*p.op, p.z_star, p.gauge);
    std::vector<std::size_t> Ms;
    for (std::size_t s : cfg.resolutions) Ms.push_back(s * s);
    const auto table = tradeoff_table(lambda_eff, p.constants.G, Ms, cfg.splat_counts);

    write_text((ctx.out / "sweep_resolution.csv").string(), sweep_csv(res));
    write_text((ctx.out / "sweep_complexity.csv").string(), sweep_csv(cx));
    write_text((ctx.out / "tradeoff_floor.csv").string(),
               tradeoff_csv(table, lambda_eff, p.constants.G));
    Json report{{"tool", "gscert"},
                {"command", "sweep"},
                {"version", kVersion},
                {"seed", ctx.seed},
                {"scene_hash", p.scene_hash},
                {"resolution", to_json(res)},
                {"complexity", to_json(cx)},
                {"tradeoff", Json{{"lambda_eff", lambda_eff},
                                  {"G", p.constants.G},
                                  {"rows", table.size()},
                                  {"note", "floor = (lambda_eff / G) sqrt(M / N) with absorbed "
                                           "constants set to 1"}}}};
    write_text((ctx.out / "sweep_report.json").string(), dump(report));
    write_manifest(ctx, "sweep",
                   {"sweep_resolution.csv", "sweep_complexity.csv", "tradeoff_floor.csv",
                    "sweep_report.json"});

    out << "resolution    slope " << fmt(res.fit.slope) << " +- " << fmt(res.fit.slope_se)
        << "  lambda_eff variation " << fmt(res.lambda_variation) << "\n"
        << "complexity    slope " << fmt(cx.fit.slope) << "  empirical <= L "
        << (cx.empirical_within_L ? "yes" : "NO") << "\n"
        << "tradeoff      " << table.size() << " (M, N) rows\n";
    if (!cx.empirical_within_L) {
      err << "empirical misfit Lipschitz supremum exceeds the formula L\n";
      return 3;
    }
    return 0;
  });
}

}  // namespace gscert
