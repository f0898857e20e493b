// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "gscert/error.hpp"
#include "gscert/forward.hpp"
#include "gscert/observability.hpp"
#include "helpers.hpp"

using namespace gscert;
using testutil::scene;
using testutil::splat;

namespace {

Scene duplicate_pair() {
  const SplatBlock s = splat(0.5, 0.5, 0.012, 0.003, 0.008, {0.9, 0.5, 0.2}, 0.8);
  return scene({s, s});
}

}  // namespace

TEST_SUITE("observability") {
  TEST_CASE("diagonal oracle spectrum") {
    Eigen::VectorXd diag(27);
    for (int i = 0; i < 27; ++i) diag[i] = 2.0 + 0.5 * i;
    const LinearOracle w(ImageGrid(3, 3), diag.asDiagonal().toDenseMatrix());
    const Scene z = testutil::three_splats();
    CHECK(jacobian_sigma_min(w, z) == doctest::Approx(2.0).epsilon(1e-14));
    const Spectrum s = jacobian_spectrum(w, z);
    CHECK(s.sigma_max == doctest::Approx(15.0).epsilon(1e-14));
    CHECK(s.weakest.cols() == 4);
    CHECK(std::abs(s.weakest(0, 0)) == doctest::Approx(1.0));
  }

  TEST_CASE("row replication scales sigma_min by sqrt(k)") {
    const LinearOracle w = LinearOracle::random(ImageGrid(3, 3), 2, 0.7, 3.0, 4);
    for (std::size_t k : {2u, 3u, 5u}) {
      const Eigen::MatrixXd& W = w.weights();
      Eigen::MatrixXd stacked(W.rows() * k, W.cols());
      for (std::size_t r = 0; r < k; ++r) stacked.middleRows(r * W.rows(), W.rows()) = W;
      CHECK(matrix_sigma_min(stacked) == doctest::Approx(0.7 * std::sqrt(double(k))).epsilon(1e-12));
      CHECK(w.replicated(k).sigma_min() == doctest::Approx(0.7 * std::sqrt(double(k))).epsilon(1e-12));
    }
  }

  TEST_CASE("duplicate splats have a null direction") {
    const Scene z = duplicate_pair();
    const ImageGrid grid(16, 16);
    CHECK(jacobian_sigma_min(z, grid, Gauge::none) <= 1e-8);
    CHECK(jacobian_sigma_min(z, grid, Gauge::opacity) <= 1e-8);
    const GaussianSplatOperator op(grid);
    const GrowthCheck g = verify_quadratic_growth(op, z, 0.05, 100, 3, Gauge::opacity);
    CHECK(g.kappa_hat <= 1e-4);
    CHECK_FALSE(g.certified);
    const RadiusEstimate r = estimate_r0(op, z, 0.5, 100, 3, 0.05, Gauge::opacity);
    CHECK(r.r0 == 0.0);
    CHECK_FALSE(r.certified);
  }

  TEST_CASE("opacity-color symmetry without a gauge") {
    // alpha and color enter only through their product, so the full Jacobian
    // is rank deficient for every scene.
    const Scene z = testutil::three_splats();
    const ImageGrid grid(16, 16);
    const GaussianSplatOperator op(grid);
    const Spectrum s = jacobian_spectrum(op, z, Gauge::none);
    CHECK(s.sigma_min <= s.tolerance());
    CHECK(jacobian_sigma_min(z, grid, Gauge::opacity) > 1e-3);
  }

  TEST_CASE("lambda_eff") {
    CHECK(estimate_lambda_eff(10.0, 25) == 2.0);
    CHECK(estimate_lambda_eff(0.0, 25) == 0.0);
    const Scene z = testutil::three_splats();
    for (std::size_t side : {16u, 17u, 23u}) {
      const GaussianSplatOperator op(ImageGrid(side, side));
      const double smin = jacobian_sigma_min(op, z, Gauge::opacity);
      const double lam = estimate_lambda_eff(op, z, Gauge::opacity);
      const double root = std::sqrt(double(side * side));
      // Exhaustive scan of nearby doubles: does any x satisfy fl(x * root) == smin?
      bool preimage = false;
      double x = smin / root;
      for (int k = 0; k < 8; ++k) x = std::nextafter(x, 0.0);
      for (int k = 0; k < 17; ++k, x = std::nextafter(x, 1e300))
        preimage = preimage || x * root == smin;
      if (preimage) {
        CHECK(lam * root == smin);
      } else {
        CHECK(lam == smin / root);
        CHECK(std::abs(lam * root - smin) <= std::abs(std::nextafter(smin, 1e300) - smin));
      }
    }
    // sqrt(M) a power of two: always exact.
    for (double s : {0.1, 0.3, 1.7, 2.9e-3})
      CHECK(estimate_lambda_eff(s, 256) * 16.0 == s);
    // On [17/16, 2) some doubles are never fl(17 * x); the correctly rounded
    // quotient is returned for those.
    int missing = 0;
    double s = 1.5;
    for (int k = 0; missing == 0 && k < 1000; ++k, s = std::nextafter(s, 2.0)) {
      const double b = s / 17.0;
      if (b * 17.0 != s && std::nextafter(b, 2.0) * 17.0 != s && std::nextafter(b, 0.0) * 17.0 != s) {
        ++missing;
        CHECK(estimate_lambda_eff(s, 289) == b);
      }
    }
    CHECK(missing == 1);
  }

  TEST_CASE("lambda_eff is stable from 16x16 to 64x64") {
    const Scene z = testutil::three_splats();
    const double a = estimate_lambda_eff(GaussianSplatOperator(ImageGrid(16, 16)), z, Gauge::opacity);
    const double b = estimate_lambda_eff(GaussianSplatOperator(ImageGrid(64, 64)), z, Gauge::opacity);
    const double sa = jacobian_sigma_min(z, ImageGrid(16, 16), Gauge::opacity);
    const double sb = jacobian_sigma_min(z, ImageGrid(64, 64), Gauge::opacity);
    CHECK(std::abs(b / a - 1.0) <= 0.2);
    CHECK(sb / sa == doctest::Approx(4.0).epsilon(0.2));
  }

  TEST_CASE("growth on the linear oracle") {
    const LinearOracle w = LinearOracle::random(ImageGrid(4, 4), 2, 0.5, 2.0, 8);
    SamplerConfig s;
    s.blocks = 2;
    s.interior_margin = 0.3;
    const Scene z = sample_scenes(s, 2, 1).front();
    const GrowthCheck g = verify_quadratic_growth(w, z, 0.05, 10000, 9);
    CHECK(g.certified);
    CHECK(g.kappa_hat == doctest::Approx(0.5).epsilon(0.05));
    CHECK(g.kappa_hat <= 0.5 * (1 + 1e-9));
    const RadiusEstimate r = estimate_r0(w, z, 0.5, 200, 9, 0.05);
    CHECK(r.certified);
    CHECK(r.r0 == 0.05);
    CHECK_THROWS_AS(verify_quadratic_growth(w, z, 0.0, 10, 1), Error);
    CHECK_THROWS_AS(estimate_r0(w, z, 0.0, 10, 1, 0.05), Error);
    CHECK_THROWS_AS(estimate_r0(w, z, 1.5, 10, 1, 0.05), Error);
  }

  TEST_CASE("single splat has a positive radius") {
    const GaussianSplatOperator op(ImageGrid(16, 16));
    const Scene z = scene({splat(0.5, 0.5, 0.012, 0.003, 0.008, {0.9, 0.5, 0.2}, 0.8)});
    const RadiusEstimate r = estimate_r0(op, z, 0.5, 200, 4, 0.05, Gauge::opacity);
    CHECK(r.certified);
    CHECK(r.r0 > 0.0);
    CHECK(r.kappa_hat >= 0.5 * r.sigma_min);
  }

  TEST_CASE("kappa_hat never exceeds sigma_min by more than 5%") {
    const GaussianSplatOperator op(ImageGrid(16, 16));
    SamplerConfig s;
    s.blocks = 2;
    s.interior_margin = 0.2;
    std::size_t bad = 0;
    for (const auto& z : sample_scenes(s, 31, 20)) {
      const GrowthCheck g = verify_quadratic_growth(op, z, 0.01, 50, 2, Gauge::opacity);
      if (g.kappa_hat > 1.05 * g.sigma_min + g.tolerance) ++bad;
    }
    CHECK(bad == 0);
  }

  TEST_CASE("stability estimate is deterministic") {
    const GaussianSplatOperator op(ImageGrid(12, 12));
    const Scene z = testutil::three_splats();
    const auto a = estimate_stability(op, z, 0.5, 50, 6, 0.05, Gauge::opacity);
    const auto b = estimate_stability(op, z, 0.5, 50, 6, 0.05, Gauge::opacity);
    CHECK(a.kappa_hat == b.kappa_hat);
    CHECK(a.r0_hat == b.r0_hat);
    CHECK(a.lambda_eff * std::sqrt(144.0) == a.sigma_min);
    CHECK(a.jacobian_columns == 24);
    CHECK(a.grid_id == "12x12");
  }
}
