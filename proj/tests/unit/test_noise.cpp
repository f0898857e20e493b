// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "gscert/error.hpp"
#include "gscert/forward.hpp"
#include "gscert/noise.hpp"
#include "gscert/runtime.hpp"
#include "helpers.hpp"

using namespace gscert;

TEST_SUITE("noise") {
  TEST_CASE("model parameters") {
    CHECK(parse_noise_kind("gaussian") == NoiseKind::gaussian);
    CHECK(parse_noise_kind("uniform-bounded") == NoiseKind::uniform);
    CHECK_THROWS_AS(parse_noise_kind("cauchy"), Error);
    const NoiseModel u{NoiseKind::uniform, 0.3, std::nullopt};
    CHECK(u.variance_proxy() == doctest::Approx(0.09));
    CHECK(u.coordinate_variance() == doctest::Approx(0.03));
    CHECK(u.variance_proxy() >= u.coordinate_variance());
    const NoiseModel g{NoiseKind::gaussian, 0.1, std::nullopt};
    CHECK(g.expected_energy(300) == doctest::Approx(3.0));
    CHECK_THROWS_AS((NoiseModel{NoiseKind::gaussian, -1.0, std::nullopt}.validate()), Error);
  }

  TEST_CASE("zero scale") {
    const auto r = draw_noise({NoiseKind::gaussian, 0.0, std::nullopt}, ImageGrid(5, 5), 1);
    CHECK(r.eta.norm() == 0.0);
    CHECK(r.energy == 0.0);
  }

  TEST_CASE("rademacher energy is exact") {
    const ImageGrid g(9, 7);
    const auto r = draw_noise({NoiseKind::rademacher, 0.25, std::nullopt}, g, 3);
    CHECK(r.energy == doctest::Approx(0.25 * std::sqrt(3.0 * 63)).epsilon(1e-14));
    for (Eigen::Index i = 0; i < r.eta.values.size(); ++i) CHECK(std::abs(r.eta.values[i]) == 0.25);
  }

  TEST_CASE("energy is the norm and draws are deterministic") {
    const ImageGrid g(6, 6);
    for (auto kind : {NoiseKind::gaussian, NoiseKind::rademacher, NoiseKind::uniform}) {
      const NoiseModel m{kind, 0.2, std::nullopt};
      const auto a = draw_noise(m, g, 77);
      const auto b = draw_noise(m, g, 77);
      CHECK(a.eta.values == b.eta.values);
      CHECK(a.energy == doctest::Approx(a.eta.values.norm()).epsilon(1e-15));
      CHECK(draw_noise(m, g, 78).eta.values != a.eta.values);
    }
  }

  TEST_CASE("truncation resamples") {
    const ImageGrid g(4, 4);
    const NoiseModel m{NoiseKind::gaussian, 1.0, 6.0};
    for (std::uint64_t s = 0; s < 50; ++s) CHECK(draw_noise(m, g, s).energy <= 6.0);
    const NoiseModel impossible{NoiseKind::rademacher, 1.0, 1.0};
    CHECK_THROWS_AS(draw_noise(impossible, g, 0), Error);
  }

  TEST_CASE("coordinate mean and variance") {
    // 1e5 draws of a 3-entry image: per-coordinate mean within 4 SE of 0 and
    // variance within sigma^2 + 4 SE.
    const ImageGrid g(1, 1);
    const std::size_t n = 100000;
    for (auto kind : {NoiseKind::gaussian, NoiseKind::rademacher, NoiseKind::uniform}) {
      const NoiseModel m{kind, 0.5, std::nullopt};
      Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sq = Eigen::Vector3d::Zero(),
                      q4 = Eigen::Vector3d::Zero();
      for (std::size_t t = 0; t < n; ++t) {
        const Eigen::VectorXd e = draw_noise(m, g, derive_seed(123, t)).eta.values;
        sum += e;
        sq += e.cwiseProduct(e);
        q4 += e.cwiseProduct(e).cwiseProduct(e).cwiseProduct(e);
      }
      for (int c = 0; c < 3; ++c) {
        const double mean = sum[c] / n, var = sq[c] / n;
        const double se_mean = std::sqrt(var / n);
        const double se_var = std::sqrt((q4[c] / n - var * var) / n);
        CHECK(std::abs(mean) <= 4.0 * se_mean);
        CHECK(var <= m.variance_proxy() + 4.0 * se_var);
      }
    }
  }

  TEST_CASE("mgf proxy") {
    const ImageGrid g(4, 4);
    std::vector<Eigen::VectorXd> dirs;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(48);
    u[0] = 1.0;
    dirs.push_back(u);
    dirs.push_back(Eigen::VectorXd::Constant(48, 1.0 / std::sqrt(48.0)));
    for (auto kind : {NoiseKind::gaussian, NoiseKind::rademacher, NoiseKind::uniform}) {
      const auto r = mgf_proxy_check({kind, 0.3, std::nullopt}, dirs, 20000, 5);
      CHECK(r.certified);
      CHECK(r.entries.size() == 6);
    }
    const auto g_ratio = mgf_proxy_check({NoiseKind::gaussian, 0.3, std::nullopt}, dirs, 20000, 5);
    CHECK(g_ratio.worst_ratio == doctest::Approx(1.0).epsilon(0.1));
    // Along a coordinate axis a rademacher projection at lambda sigma = 2 has
    // log cosh(2) / 2 = 0.6625 as its population ratio.
    const auto r_ratio = mgf_proxy_check({NoiseKind::rademacher, 0.3, std::nullopt}, {u}, 2000, 5);
    CHECK(r_ratio.entries[2].ratio == doctest::Approx(std::log(std::cosh(2.0)) / 2.0).epsilon(0.05));
    CHECK(r_ratio.worst_ratio < 1.0);
    CHECK_THROWS_AS(mgf_proxy_check({NoiseKind::gaussian, 0.3, std::nullopt},
                                    {Eigen::VectorXd::Constant(48, 1.0)}, 100, 1),
                    Error);
  }
}
