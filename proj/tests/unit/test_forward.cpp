// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "gscert/constants.hpp"
#include "gscert/error.hpp"
#include "gscert/forward.hpp"
#include "gscert/noise.hpp"
#include "gscert/runtime.hpp"
#include "helpers.hpp"

using namespace gscert;
using testutil::rel_err;
using testutil::scene;
using testutil::splat;

namespace {

// Central differences of the rendered image, one column per coordinate.
Eigen::MatrixXd fd_jacobian(const Scene& z, const ImageGrid& grid) {
  const Eigen::VectorXd v = to_vector(z);
  Eigen::MatrixXd J(grid.entries(), v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(v[j]));
    Eigen::VectorXd p = v, m = v;
    p[j] += h;
    m[j] -= h;
    J.col(j) = (render(from_vector(z.domain, p), grid).values -
                render(from_vector(z.domain, m), grid).values) / (2.0 * h);
  }
  return J;
}

Eigen::VectorXd fd_gradient(const Scene& z, const Observation& obs) {
  const Eigen::VectorXd v = to_vector(z);
  Eigen::VectorXd g(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(v[j]));
    Eigen::VectorXd p = v, m = v;
    p[j] += h;
    m[j] -= h;
    g[j] = (misfit(from_vector(z.domain, p), obs) - misfit(from_vector(z.domain, m), obs)) /
           (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_SUITE("forward") {
  TEST_CASE("pixel grid") {
    const ImageGrid g(4, 2);
    CHECK(g.pixels() == 8);
    CHECK(g.entries() == 24);
    const auto c = g.pixel_center(1, 3);
    CHECK(c[0] == doctest::Approx(3.5 / 4));
    CHECK(c[1] == doctest::Approx(1.5 / 2));
    CHECK(g.id() == "4x2");
    CHECK_THROWS_AS(ImageGrid(0, 3), Error);
  }

  TEST_CASE("hand-evaluated kernel values") {
    const Scene z = scene({splat(0.5, 0.5, 0.01, 0.0, 0.01, {1, 0, 0}, 1.0)});
    // A 1x1 grid has its only pixel centre at (0.5, 0.5).
    const Image centre = render(z, ImageGrid(1, 1));
    CHECK(centre.at(0, 0, 0) == 1.0);
    CHECK(centre.at(0, 0, 1) == 0.0);
    CHECK(centre.at(0, 0, 2) == 0.0);

    // No pixel centre can sit at x = 0.6, so move the splat to x = 0.4
    // instead: the offset is again 0.1 along x.
    Scene shifted = z;
    shifted.blocks[0].position = {0.4, 0.5};
    const Image off = render(shifted, ImageGrid(1, 1));
    CHECK(off.at(0, 0, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    CHECK(off.at(0, 0, 0) == doctest::Approx(0.60653).epsilon(1e-5));
  }

  TEST_CASE("additivity over splats") {
    const ImageGrid grid(12, 9);
    const auto scenes = sample_scenes(DomainBox{}, 5, 11, 100);
    double worst = 0.0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      const Scene& z = scenes[s];
      const std::size_t cut = 1 + s % 4;
      Scene a{z.domain, {z.blocks.begin(), z.blocks.begin() + cut}};
      Scene b{z.domain, {z.blocks.begin() + cut, z.blocks.end()}};
      const Eigen::VectorXd sum = render(a, grid).values + render(b, grid).values;
      const Eigen::VectorXd all = render(z, grid).values;
      worst = std::max(worst, (sum - all).norm() / all.norm());
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("color homogeneity") {
    const ImageGrid grid(10, 10);
    const Scene z = testutil::three_splats();
    Scene scaled = z;
    for (auto& b : scaled.blocks)
      for (auto& c : b.color) c *= 0.5;
    const Eigen::VectorXd a = render(scaled, grid).values;
    const Eigen::VectorXd b = 0.5 * render(z, grid).values;
    CHECK((a - b).norm() <= 1e-12 * b.norm());
  }

  TEST_CASE("output bound over sampled scenes") {
    const ImageGrid grid(16, 16);
    const DomainBox d;
    for (std::size_t N : {1u, 3u}) {
      const double B = analytic_output_bound(d, N, grid);
      std::size_t violations = 0;
      for (const auto& z : sample_scenes(d, N, 100 + N, 10000 / N))
        if (render(z, grid).norm() > B) ++violations;
      CHECK(violations == 0);
    }
  }

  TEST_CASE("misfit identities") {
    const ImageGrid grid(8, 6);
    const Scene z = testutil::three_splats();
    const Image y = render(z, grid);
    CHECK(misfit(z, Observation{y, {}, {}}) == 0.0);

    Image ones = y;
    ones.values.array() += 1.0;
    CHECK(misfit(z, Observation{ones, {}, {}}) ==
          doctest::Approx(static_cast<double>(grid.entries())).epsilon(1e-12));

    const NoiseRealization eta = draw_noise({NoiseKind::gaussian, 0.1, std::nullopt}, grid, 5);
    const Observation obs{Image(grid, y.values + eta.eta.values), {}, {}};
    CHECK(rel_err(misfit(z, obs), eta.energy * eta.energy) <= 1e-12);

    const Observation wrong{Image::zeros(ImageGrid(4, 4)), {}, {}};
    CHECK_THROWS_AS(misfit(GaussianSplatOperator(grid), z, wrong), Error);
    CHECK_THROWS_AS(misfit(y, wrong.y_obs), Error);
  }

  TEST_CASE("gradient vanishes at the observed scene") {
    const ImageGrid grid(8, 8);
    const Scene z = testutil::three_splats();
    const Eigen::VectorXd g = misfit_gradient(z, Observation{render(z, grid), {}, {}});
    CHECK(g.norm() == 0.0);
  }

  TEST_CASE("color gradient is the linear formula") {
    const ImageGrid grid(7, 5);
    const Scene z = testutil::three_splats();
    Image y = render(z, grid);
    y.values.array() += 0.1;
    const Eigen::VectorXd g = misfit_gradient(z, Observation{y, {}, {}});
    const Eigen::VectorXd r = render(z, grid).values - y.values;
    // Kernel of splat 1 recovered from a unit-color, unit-alpha render.
    Scene solo{z.domain, {z.blocks[1]}};
    solo.blocks[0].color = {1, 1, 1};
    solo.blocks[0].alpha = 1.0;
    const Eigen::VectorXd k = render(solo, grid).values;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      double expect = 0.0;
      for (std::size_t p = 0; p < grid.pixels(); ++p)
        expect += 2.0 * r[3 * p + ch] * z.blocks[1].alpha * k[3 * p + ch];
      CHECK(g[9 + block::color + ch] == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  TEST_CASE("Jacobian column structure") {
    const ImageGrid grid(6, 6);
    const Scene z = testutil::three_splats();
    const Eigen::MatrixXd J = jacobian(z, grid);
    CHECK(J.rows() == static_cast<Eigen::Index>(grid.entries()));
    CHECK(J.cols() == 27);
    Scene solo{z.domain, {z.blocks[2]}};
    solo.blocks[0].color = {1, 1, 1};
    solo.blocks[0].alpha = 1.0;
    const Eigen::VectorXd k = render(solo, grid).values;
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t p = 0; p < grid.pixels(); ++p) {
        const double expect = z.blocks[2].alpha * k[3 * p + ch];
        CHECK(J(3 * p + ch, 18 + block::color + ch) == doctest::Approx(expect).epsilon(1e-14));
        for (std::size_t other = 0; other < 3; ++other)
          if (other != ch) CHECK(J(3 * p + other, 18 + block::color + ch) == 0.0);
      }

    Scene dark = z;
    for (auto& b : dark.blocks) b.alpha = 0.0;
    const Eigen::MatrixXd Jd = jacobian(dark, grid);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(Jd.middleCols(9 * i, 8).norm() == 0.0);
      Scene one{z.domain, {z.blocks[i]}};
      one.blocks[0].alpha = 1.0;
      CHECK((Jd.col(9 * i + 8) - render(one, grid).values).norm() <= 1e-15);
    }
  }

  TEST_CASE("Jacobian and gradient match central differences") {
    const ImageGrid grid(10, 10);
    SamplerConfig cfg;
    cfg.blocks = 2;
    cfg.interior_margin = 0.1;
    double worst_j = 0.0, worst_g = 0.0;
    const auto scenes = sample_scenes(cfg, 21, 10);
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      const Scene& z = scenes[s];
      const Eigen::MatrixXd J = jacobian(z, grid);
      const Eigen::MatrixXd F = fd_jacobian(z, grid);
      worst_j = std::max(worst_j, (J - F).norm() / J.norm());
      const NoiseRealization eta = draw_noise({NoiseKind::gaussian, 0.05, std::nullopt}, grid, s);
      const Observation obs{Image(grid, render(scenes[(s + 1) % scenes.size()], grid).values +
                                            eta.eta.values),
                            {}, {}};
      const Eigen::VectorXd g = misfit_gradient(z, obs);
      worst_g = std::max(worst_g, (g - fd_gradient(z, obs)).norm() / g.norm());
    }
    CHECK(worst_j < 1e-5);
    CHECK(worst_g < 1e-5);
  }

  TEST_CASE("render is identical across thread counts") {
    const ImageGrid grid(40, 30);
    const Scene z = sample_scenes(DomainBox{}, 6, 3, 1).front();
    set_thread_limit(1);
    const Eigen::VectorXd a = render(z, grid).values;
    const Eigen::MatrixXd Ja = jacobian(z, grid);
    set_thread_limit(4);
    const Eigen::VectorXd b = render(z, grid).values;
    const Eigen::MatrixXd Jb = jacobian(z, grid);
    set_thread_limit(0);
    CHECK(a == b);
    CHECK(Ja == Jb);
  }

  TEST_CASE("linear oracle basics") {
    const ImageGrid grid(3, 3);  // 27 entries
    const Scene z = testutil::three_splats();

    const LinearOracle identity(grid, Eigen::MatrixXd::Identity(27, 27));
    CHECK(identity.apply(z).values == to_vector(z));

    const LinearOracle zero(grid, Eigen::MatrixXd::Zero(27, 27));
    CHECK(zero.apply(z).norm() == 0.0);

    Eigen::VectorXd diag(27);
    for (int i = 0; i < 27; ++i) diag[i] = 2.0 + i;
    const LinearOracle d(grid, diag.asDiagonal().toDenseMatrix());
    CHECK(d.sigma_min() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(d.block_column_norm(1) == doctest::Approx(19.0).epsilon(1e-14));
    CHECK(d.jacobian(z) == d.weights());
    CHECK(linear_apply(d, z).values == d.weights() * to_vector(z));

    CHECK_THROWS_AS(LinearOracle(grid, Eigen::MatrixXd::Zero(26, 27)), Error);
    CHECK_THROWS_AS(LinearOracle(grid, Eigen::MatrixXd::Zero(27, 10)), Error);
  }

  TEST_CASE("random linear oracle spectrum and replication") {
    const LinearOracle w = LinearOracle::random(ImageGrid(4, 4), 2, 0.5, 2.0, 9);
    CHECK(w.sigma_min() == doctest::Approx(0.5).epsilon(1e-12));
    const LinearOracle r = w.replicated(4);
    CHECK(r.grid().pixels() == 64);
    CHECK(r.sigma_min() == doctest::Approx(1.0).epsilon(1e-12));
  }
}
