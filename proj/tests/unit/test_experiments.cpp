// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "gscert/constants.hpp"
#include "gscert/error.hpp"
#include "gscert/experiments.hpp"
#include "helpers.hpp"

using namespace gscert;
using testutil::scene;
using testutil::splat;

namespace {

Scene single_splat() {
  return scene({splat(0.5, 0.5, 0.012, 0.003, 0.008, {0.9, 0.5, 0.2}, 0.8)});
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("Clopper-Pearson upper limit") {
    // Zero successes: closed form 1 - (1 - c)^(1/n).
    CHECK(binomial_upper_limit(0, 10000) ==
          doctest::Approx(1.0 - std::pow(0.01, 1.0 / 10000)).epsilon(1e-9));
    CHECK(binomial_upper_limit(10, 10) == 1.0);
    const double u = binomial_upper_limit(30, 1000);
    CHECK(u > 0.03);
    CHECK(u < 0.05);
    CHECK_THROWS_AS(binomial_upper_limit(3, 2), Error);
  }

  TEST_CASE("moment check trivial cases") {
    const GaussianSplatOperator op(ImageGrid(8, 8));
    const Scene z = testutil::three_splats();
    const NoiseModel g{NoiseKind::gaussian, 0.1, std::nullopt};
    const MomentReport same = run_moment_check(op, z, z, g, 200, 1);
    CHECK(same.sample_mean == 0.0);
    CHECK(same.sample_sd == 0.0);
    CHECK(same.passed);

    Scene zp = z;
    zp.blocks[0].position[0] += 0.02;
    const MomentReport quiet = run_moment_check(op, zp, z, {NoiseKind::gaussian, 0.0, std::nullopt},
                                                150, 1);
    CHECK(quiet.sample_sd == 0.0);
    CHECK(quiet.sample_mean == doctest::Approx(quiet.exact_gap).epsilon(1e-12));
    CHECK(quiet.passed);
    CHECK_THROWS_AS(run_moment_check(op, zp, z, g, 99, 1), Error);
  }

  TEST_CASE("moment check passes on a random pair") {
    const GaussianSplatOperator op(ImageGrid(8, 8));
    const auto pair = sample_scenes(DomainBox{}, 2, 5, 2);
    const MomentReport r =
        run_moment_check(op, pair[0], pair[1], {NoiseKind::gaussian, 0.1, std::nullopt}, 20000, 3);
    CHECK(r.passed);
    CHECK(std::abs(r.z_score) <= 4.0);
  }

  TEST_CASE("concentration trivial cases") {
    const GaussianSplatOperator op(ImageGrid(8, 8));
    const Scene z = testutil::three_splats();
    const double G = analytic_constants(z.domain, 3, op.grid()).G;
    const Scene zp = concentration_partner(z, G, 25.0, Gauge::opacity, 4);
    CHECK(G * G * 3 * std::pow(d2_distance(z, zp), 2) == doctest::Approx(25.0).epsilon(1e-9));

    const NoiseModel none{NoiseKind::gaussian, 0.0, std::nullopt};
    const auto q = run_concentration_check(op, zp, z, none, none, G, 200, {0.1, 1.0}, 1);
    for (const auto& row : q.rows) {
      CHECK(row.frequency == 0.0);
      CHECK(row.bound >= 0.0);
    }

    // Rademacher noise of scale s bounds |F - E F| by 2 s ||dA|| (its energy is
    // constant), so larger t is never exceeded.
    const NoiseModel rad{NoiseKind::rademacher, 0.05, std::nullopt};
    const double max_dev = 2 * 0.05 * std::sqrt(expected_misfit_gap(op, zp, z, G).gap) *
                           std::sqrt(double(op.grid().entries()));
    const auto r = run_concentration_check(op, zp, z, rad, rad, G, 500, {1.01 * max_dev}, 2);
    CHECK(r.rows[0].frequency == 0.0);

    CHECK_THROWS_AS(run_concentration_check(op, zp, z, rad, rad, G, 10, {1.0, 0.5}, 2), Error);
  }

  TEST_CASE("concentration passes with a correct declaration") {
    const GaussianSplatOperator op(ImageGrid(16, 16));
    const Scene z = single_splat();
    const double G = analytic_constants(z.domain, 1, op.grid()).G;
    const Scene zp = concentration_partner(z, G, 25.0, Gauge::opacity, 4);
    const NoiseModel g{NoiseKind::gaussian, 0.05, std::nullopt};
    const auto grid = default_t_grid(g.variance_proxy(), 25.0, 10);
    CHECK(grid.size() == 10);
    CHECK(grid.front() == doctest::Approx(0.0025));
    CHECK(grid.back() == doctest::Approx(0.0025 * 50 * 25));
    const auto r = run_concentration_check(op, zp, z, g, g, G, 10000, grid, 7);
    CHECK(r.K == doctest::Approx(25.0));
    CHECK(r.passed);
  }

  TEST_CASE("binomial floor limits the checkable range of the tail") {
    // sigma = 0.1 with K = 25: the bound at the top t is ~1e-8, below the
    // zero-exceedance 99% limit 1 - 0.01^(1/n). No exceedance is observed,
    // yet the row cannot pass at n = 1e4.
    const GaussianSplatOperator op(ImageGrid(16, 16));
    const Scene z = single_splat();
    const double G = analytic_constants(z.domain, 1, op.grid()).G;
    const Scene zp = concentration_partner(z, G, 25.0, Gauge::opacity, 4);
    const NoiseModel g{NoiseKind::gaussian, 0.1, std::nullopt};
    const auto grid = default_t_grid(g.variance_proxy(), 25.0, 10);
    const auto r = run_concentration_check(op, zp, z, g, g, G, 10000, grid, 7);
    const double floor = 1.0 - std::pow(0.01, 1e-4);
    for (const auto& row : r.rows) {
      CHECK(row.frequency <= row.bound);
      if (row.exceedances == 0) CHECK(row.upper_limit == doctest::Approx(floor).epsilon(1e-9));
      CHECK(row.passed == (row.upper_limit <= row.bound));
    }
    CHECK(r.rows.back().exceedances == 0);
    CHECK(r.rows.back().bound < floor);
    CHECK_FALSE(r.passed);
  }

  TEST_CASE("PGD examples") {
    const GaussianSplatOperator op(ImageGrid(16, 16));
    const Scene z = single_splat();
    const Observation clean{op.apply(z), {}, {}};
    CHECK(reconstruct_pgd(op, clean, z, 1e-3, 20, Gauge::opacity).scene == z);

    Scene init = z;
    init.blocks[0].color[0] += 1e-3;
    init.blocks[0].color[2] -= 1e-3;
    CHECK(reconstruct_pgd(op, clean, init, 0.0, 50, Gauge::opacity).scene == init);

    // Color only: frozen geometry makes this a linear least-squares problem.
    const double step = default_pgd_step(op, z, Gauge::color);
    const PgdResult r = reconstruct_pgd(op, clean, init, step, 2000, Gauge::color);
    CHECK(r.scene.blocks[0].position == z.blocks[0].position);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(r.scene.blocks[0].color[c] - z.blocks[0].color[c]) < 1e-6);
    CHECK(r.trace.size() == 2001);
    CHECK(r.trace.back() < r.trace.front());
    CHECK_THROWS_AS(reconstruct_pgd(op, clean, init, -1.0, 5), Error);
  }

  TEST_CASE("PGD divergence is reported") {
    const LinearOracle w = LinearOracle::random(ImageGrid(4, 4), 1, 1.0, 3.0, 2);
    DomainBox wide;
    wide.position_lo = -1e300;
    wide.position_hi = 1e300;
    wide.color_lo = -1e300;
    wide.color_hi = 1e300;
    wide.alpha_lo = -1e300;
    wide.alpha_hi = 1e300;
    Scene z = single_splat();
    z.domain = wide;
    const Observation obs{Image::zeros(w.grid()), {}, {}};
    try {
      reconstruct_pgd(w, obs, z, 1e3, 500);
      FAIL("expected divergence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::numeric);
      CHECK(std::string(e.what()).find("trace") != std::string::npos);
    }
  }

  TEST_CASE("bound validation on the linear oracle") {
    const LinearOracle w = LinearOracle::random(ImageGrid(4, 4), 1, 0.5, 2.0, 12);
    SamplerConfig s;
    s.interior_margin = 0.3;
    BoundValidationConfig cfg;
    cfg.z_star = sample_scenes(s, 3, 1).front();
    cfg.noise = {NoiseKind::gaussian, 0.05, std::nullopt};
    cfg.trials = 100;
    cfg.iters = 400;
    cfg.kappa = w.sigma_min();
    cfg.r0 = 10.0;
    cfg.G = linear_oracle_constants(w, s.domain).G;
    cfg.seed = 5;
    const auto rep = run_bound_validation(w, cfg);
    CHECK(rep.included + rep.excluded == 100);
    CHECK(rep.det_violations == 0);
    CHECK(rep.hp_fraction >= rep.required_fraction);
    CHECK(rep.required_fraction == doctest::Approx(0.95 - 2 * std::sqrt(0.05 * 0.95 / rep.included)));
    CHECK(rep.max_identity_error <= 1e-12);
    CHECK(rep.passed);

    BoundValidationConfig tight = cfg;
    tight.r0 = 1e-9;
    const auto ex = run_bound_validation(w, tight);
    CHECK(ex.excluded == 100);
    CHECK(ex.det_violations == 0);
    CHECK_FALSE(ex.passed);

    BoundValidationConfig uncertified = cfg;
    uncertified.kappa = 0.0;
    try {
      run_bound_validation(w, uncertified);
      FAIL("expected refusal");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::certification);
    }
  }

  TEST_CASE("noiseless bound validation") {
    const GaussianSplatOperator op(ImageGrid(16, 16));
    BoundValidationConfig cfg;
    cfg.z_star = single_splat();
    cfg.noise = {NoiseKind::gaussian, 0.0, std::nullopt};
    cfg.trials = 10;
    cfg.gauge = Gauge::opacity;
    const auto st = estimate_stability(op, cfg.z_star, 0.5, 100, 1, 0.05, Gauge::opacity);
    cfg.kappa = st.kappa_hat;
    cfg.r0 = st.r0_hat;
    cfg.G = analytic_constants(cfg.z_star.domain, 1, op.grid()).G;
    const auto rep = run_bound_validation(op, cfg);
    CHECK(rep.det_violations == 0);
    for (const auto& rec : rep.records) CHECK(rec.eps_eta == 0.0);
  }

  TEST_CASE("log-log fit") {
    const auto f = fit_loglog({1, 2, 4, 8}, {3, 3 * std::sqrt(2.0), 6, 6 * std::sqrt(2.0)});
    CHECK(f.slope == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(f.slope_se < 1e-12);
    CHECK(f.intercept == doctest::Approx(std::log(3.0)));
    CHECK_THROWS_AS(fit_loglog({1, 2}, {1, 2}), Error);
  }

  TEST_CASE("sweeps") {
    const LinearOracle w = LinearOracle::random(ImageGrid(3, 3), 2, 0.5, 2.0, 1);
    const SweepResult r = run_resolution_sweep(w, {1, 4, 16});
    CHECK(r.fit.slope == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(r.lambda_variation < 1e-10);
    CHECK_THROWS_AS(run_resolution_sweep(w, {4}), Error);
    CHECK_THROWS_AS(run_resolution_sweep(testutil::three_splats(), {32, 16, 64}, Gauge::opacity), Error);

    const SweepResult c = run_complexity_sweep(DomainBox{}, {1, 4, 16}, ImageGrid(8, 8), 200, 3);
    const auto& L = c.column("L");
    const auto& ratio = c.column("L_over_BG");
    CHECK(ratio[1] / ratio[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(ratio[2] / ratio[0] == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(c.fit.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.empirical_within_L);
    const auto& emp = c.column("empirical_L");
    for (std::size_t i = 0; i < emp.size(); ++i) CHECK(emp[i] <= L[i]);
    CHECK_THROWS_AS(run_complexity_sweep(DomainBox{}, {}, ImageGrid(8, 8), 10, 3), Error);
    CHECK_THROWS_AS(c.column("nope"), Error);
  }

  TEST_CASE("tradeoff table shape") {
    const std::vector<std::size_t> Ms{256, 1024, 4096, 16384, 65536}, Ns{1, 2, 4, 8, 16};
    const auto rows = tradeoff_table(0.1, 30.0, Ms, Ns);
    REQUIRE(rows.size() == 25);
    auto at = [&](std::size_t i, std::size_t j) { return rows[i * Ns.size() + j].floor; };
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(at(i, j) == (0.1 / 30.0) * std::sqrt(double(Ms[i]) / double(Ns[j])));
        if (i + 1 < 5) CHECK(at(i + 1, j) > at(i, j));
        if (j + 1 < 5) CHECK(at(i, j + 1) < at(i, j));
      }
  }
}
