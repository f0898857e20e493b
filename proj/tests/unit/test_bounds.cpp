// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "gscert/bounds.hpp"
#include "gscert/constants.hpp"
#include "gscert/error.hpp"
#include "gscert/forward.hpp"
#include "helpers.hpp"

using namespace gscert;
using testutil::rel_err;

TEST_SUITE("bounds") {
  TEST_CASE("deterministic stability examples") {
    CHECK(det_stability_bound(2, 0, 4) == 1.0);
    CHECK(det_stability_bound(4, 0.3, 0) == doctest::Approx(2 * 0.3 / 4));
    CHECK(det_stability_bound(1, 1, 3) == 3.0);
    CHECK_THROWS_AS(det_stability_bound(0, 1, 1), Error);
    CHECK_THROWS_AS(det_stability_bound(-1, 1, 1), Error);
  }

  TEST_CASE("deterministic envelope examples") {
    CHECK(det_error_envelope(2, 0, 3) == doctest::Approx(3.0 / 4));
    CHECK(det_error_envelope(3, 0.6, 0) == doctest::Approx(2 * 0.6 / 3));
    CHECK(det_error_envelope(3, 0.6, 0) == doctest::Approx(det_stability_bound(3, 0.6, 0)));
    CHECK(det_error_envelope(1, 1, 2) == 4.0);
    const auto fp = det_error_envelope_iterate(1, 1, 2);
    CHECK(fp.converged);
    CHECK(rel_err(fp.value, 4.0) <= 1e-10);
    CHECK_THROWS_AS(det_error_envelope(0, 1, 1), Error);
  }

  TEST_CASE("envelope equals the fixed point on random triples") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double kappa = std::pow(10.0, u(rng)), eps = std::pow(10.0, u(rng)),
                   L = std::pow(10.0, u(rng));
      const auto fp = det_error_envelope_iterate(kappa, eps, L);
      REQUIRE(fp.converged);
      worst = std::max(worst, rel_err(fp.value, det_error_envelope(kappa, eps, L)));
    }
    CHECK(worst <= 1e-10);
  }

  TEST_CASE("concentration tail examples") {
    CHECK(concentration_tail_raw(8, 1, 1, 1, 1) == doctest::Approx(2 * std::exp(-1.0)));
    CHECK(concentration_tail(8, 1, 1, 1, 1) == doctest::Approx(0.73576).epsilon(1e-5));
    CHECK(concentration_tail(1e6, 1, 1, 1, 1) == 0.0);
    CHECK(concentration_tail_raw(8 * std::log(2.0), 1, 1, 1, 0) == doctest::Approx(1.0));
    CHECK(concentration_tail_raw(0.01, 1, 1, 1, 1) > 1.0);
    CHECK(concentration_tail(0.01, 1, 1, 1, 1) == 1.0);
    CHECK_THROWS_AS(concentration_tail(0, 1, 1, 1, 1), Error);
  }

  TEST_CASE("concentration tail monotonicity") {
    const double ts[] = {0.5, 2, 8, 32};
    const double vals[] = {0.25, 1, 4};
    for (std::size_t i = 0; i + 1 < 4; ++i)
      CHECK(concentration_tail_raw(ts[i], 1, 1, 2, 1) >= concentration_tail_raw(ts[i + 1], 1, 1, 2, 1));
    for (double t : ts)
      for (std::size_t i = 0; i + 1 < 3; ++i) {
        const double a = vals[i], b = vals[i + 1];
        CHECK(concentration_tail_raw(t, a, 1, 2, 1) <= concentration_tail_raw(t, b, 1, 2, 1));
        CHECK(concentration_tail_raw(t, 1, a, 2, 1) <= concentration_tail_raw(t, 1, b, 2, 1));
        CHECK(concentration_tail_raw(t, 1, 1, 2, a) <= concentration_tail_raw(t, 1, 1, 2, b));
        CHECK(concentration_tail_raw(t, 1, 1, 1 + i, 1) <= concentration_tail_raw(t, 1, 1, 2 + i, 1));
      }
  }

  TEST_CASE("select_t examples") {
    const double delta = 2.0 / std::exp(1.0);
    CHECK(select_t(delta, 1, 1, 1, 1) == doctest::Approx(8.0));
    CHECK(select_t(0.05, 0.3, 2, 3, 0) == doctest::Approx(8 * 0.3 * std::log(40.0)));
    CHECK(select_t(0.999, 1, 1, 1, 1) > 0.0);
    CHECK_THROWS_AS(select_t(0, 1, 1, 1, 1), Error);
    CHECK_THROWS_AS(select_t(1, 1, 1, 1, 1), Error);
  }

  TEST_CASE("select_t meets the budget") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t bad = 0;
    for (int i = 0; i < 1000; ++i) {
      const double delta = 1e-4 + (0.99 - 1e-4) * u(rng);
      const double s2 = std::pow(10.0, -4 + 5 * u(rng));
      const double G = std::pow(10.0, -2 + 5 * u(rng));
      const std::size_t N = 1 + static_cast<std::size_t>(20 * u(rng));
      const double d = u(rng) < 0.1 ? 0.0 : std::pow(10.0, -4 + 4 * u(rng));
      const double t = select_t(delta, s2, G, N, d);
      if (concentration_tail_raw(t, s2, G, N, d) > delta * (1 + 1e-12)) ++bad;
    }
    CHECK(bad == 0);
  }

  TEST_CASE("select_t fixed-point iteration") {
    // Small G keeps t on the first branch, so the radius stops moving at once.
    const auto r = select_t_iterated(0.05, 0.01, 0.01, 1, 1.0, 0.1, 0.0, 10.0);
    CHECK(r.converged);
    CHECK(r.iterations <= 3);
    CHECK(r.t == select_t(0.05, 0.01, 0.01, 1, r.d));
    CHECK(r.d == hp_error_bound(1.0, 0.1, 0.0, r.t, 0.01, 0.01, 1, r.d).radius);

    // On the second branch the map contracts by about 1/2 per step: the cap of
    // 20 iterations stops it short of 1e-8 and says so.
    const auto slow = select_t_iterated(0.05, 0.01, 2.0, 1, 1.0, 0.1, 0.0, 10.0);
    CHECK_FALSE(slow.converged);
    CHECK(slow.iterations == 20);
    CHECK(slow.t == doctest::Approx(select_t(0.05, 0.01, 2.0, 1, slow.d)).epsilon(1e-4));
  }

  TEST_CASE("high-probability bound examples") {
    const auto a = hp_error_bound(1, 0, 3, 1, 1, 1, 1, 1);
    CHECK(a.radius == 2.0);
    CHECK(a.confidence == doctest::Approx(1 - std::exp(-1.0 / 8)));
    CHECK(a.confidence == doctest::Approx(0.11750).epsilon(1e-4));
    CHECK(hp_error_bound(1, 0, 3, 1e6, 1, 1, 1, 1).confidence == doctest::Approx(1.0));
    CHECK_THROWS_AS(hp_error_bound(0, 0, 3, 1, 1, 1, 1, 1), Error);
    for (double t : {0.1, 1.0, 10.0}) {
      CHECK(hp_error_bound(2, 0.5, 1, t, 1, 1, 1, 1).radius <
            hp_error_bound(2, 0.5, 1, 2 * t, 1, 1, 1, 1).radius);
      CHECK(hp_error_bound(2, 0.5, t, 1, 1, 1, 1, 1).radius <
            hp_error_bound(2, 0.5, 2 * t, 1, 1, 1, 1, 1).radius);
    }
  }

  TEST_CASE("tradeoff floor") {
    CHECK(tradeoff_floor(0.5, 2, 100, 25) == 0.5);
    CHECK(tradeoff_floor(0.3, 1.5, 49, 49) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(tradeoff_floor(0, 2, 100, 4) == 0.0);
    CHECK_THROWS_AS(tradeoff_floor(1, 0, 4, 4), Error);
    const double base = tradeoff_floor(0.7, 3, 16, 4);
    CHECK(tradeoff_floor(0.7, 3, 64, 4) == doctest::Approx(2 * base).epsilon(1e-15));
    CHECK(tradeoff_floor(0.7, 3, 16, 16) == doctest::Approx(base / 2).epsilon(1e-15));
  }

  TEST_CASE("expected misfit gap") {
    const ImageGrid grid(8, 8);
    const Scene z = testutil::three_splats();
    CHECK(expected_misfit_gap(z, z, grid, 5.0).gap == 0.0);

    const LinearOracle w = LinearOracle::random(ImageGrid(4, 4), 3, 0.5, 2.0, 1);
    Scene zp = z;
    zp.blocks[1].position[0] += 0.01;
    zp.blocks[2].color[2] -= 0.02;
    const Eigen::VectorXd v = to_vector(zp) - to_vector(z);
    const auto g = expected_misfit_gap(w, zp, z, 2.0);
    CHECK(g.gap == doctest::Approx((w.weights() * v).squaredNorm()).epsilon(1e-12));
    CHECK(g.upper == doctest::Approx(4.0 * 3 * v.squaredNorm()));

    // Gap below G^2 N d^2 with the analytic G on random pairs.
    const GaussianSplatOperator op(grid);
    SamplerConfig s;
    s.blocks = 2;
    const auto scenes = sample_scenes(s, 3, 2000);
    const double G = analytic_constants(s.domain, 2, grid).G;
    std::size_t bad = 0;
    for (std::size_t i = 0; i + 1 < scenes.size(); i += 2) {
      const auto r = expected_misfit_gap(op, scenes[i], scenes[i + 1], G);
      if (r.gap > r.upper) ++bad;
    }
    CHECK(bad == 0);
  }

  TEST_CASE("bound report") {
    BoundInputs in;
    in.kappa = 2;
    in.eps_eta = 0.5;
    in.misfit_gap = 1;
    in.expected_gap = 0.3;
    in.L = 10;
    in.sigma2 = 0.01;
    in.G = 3;
    in.N = 2;
    in.M = 64;
    in.d = 0.1;
    in.delta = 0.05;
    in.lambda_eff = 0.4;
    const BoundReport r = evaluate_bounds(in);
    CHECK(r.det_radius == det_stability_bound(2, 0.5, 1));
    CHECK(r.det_envelope == det_error_envelope(2, 0.5, 10));
    CHECK(r.t == select_t(0.05, 0.01, 3, 2, 0.1));
    CHECK(r.hp_radius == hp_error_bound(2, 0.5, 0.3, r.t, 0.01, 3, 2, 0.1).radius);
    CHECK(r.tail_prob <= 1.0);
    CHECK(r.tail_prob >= 0.0);
    CHECK(r.C_stab == doctest::Approx(0.4 / 3));
    CHECK(r.tradeoff_floor == tradeoff_floor(0.4, 3, 64, 2));
  }
}
