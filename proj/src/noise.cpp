// SPDX-License-Identifier: Apache-2.0
#include "gscert/noise.hpp"

#include <cmath>

#include "gscert/error.hpp"
#include "gscert/runtime.hpp"

namespace gscert {

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "rademacher") return NoiseKind::rademacher;
  if (name == "uniform" || name == "uniform-bounded") return NoiseKind::uniform;
  fail(ErrorKind::config,
       "unknown noise kind '" + name + "' (expected gaussian, rademacher or uniform)");
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::rademacher: return "rademacher";
    case NoiseKind::uniform: return "uniform";
  }
  return "unknown";
}

void NoiseModel::validate() const {
  require(std::isfinite(scale) && scale >= 0.0, ErrorKind::precondition,
          "noise scale must be finite and >= 0");
  if (truncation)
    require(std::isfinite(*truncation) && *truncation > 0.0, ErrorKind::precondition,
            "noise truncation must be positive");
}

double NoiseModel::coordinate_variance() const {
  return kind == NoiseKind::uniform ? scale * scale / 3.0 : scale * scale;
}

double NoiseModel::expected_energy(std::size_t entries) const {
  return static_cast<double>(entries) * coordinate_variance();
}

void fill_noise(const NoiseModel& model, Engine& rng, Eigen::Ref<Eigen::VectorXd> out) {
  switch (model.kind) {
    case NoiseKind::gaussian: {
      std::normal_distribution<double> dist(0.0, 1.0);
      for (Eigen::Index k = 0; k < out.size(); ++k) out[k] = model.scale * dist(rng);
      break;
    }
    case NoiseKind::rademacher: {
      for (Eigen::Index k = 0; k < out.size(); ++k)
        out[k] = (rng() >> 63) != 0 ? model.scale : -model.scale;
      break;
    }
    case NoiseKind::uniform: {
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      for (Eigen::Index k = 0; k < out.size(); ++k) out[k] = model.scale * dist(rng);
      break;
    }
  }
}

NoiseRealization draw_noise(const NoiseModel& model, const ImageGrid& grid, std::uint64_t seed) {
  model.validate();
  constexpr unsigned kMaxResamples = 10000;
  NoiseRealization r;
  r.seed = seed;
  r.eta = Image::zeros(grid);
  for (unsigned sub = 0;; ++sub) {
    Engine rng = make_engine(seed, sub);
    fill_noise(model, rng, r.eta.values);
    r.energy = r.eta.values.norm();
    r.resamples = sub;
    if (!model.truncation || r.energy <= *model.truncation) return r;
    require(sub + 1 < kMaxResamples, ErrorKind::numeric,
            "noise truncation rejected every draw; B_eta is too small for this model");
  }
}

MgfCheck mgf_proxy_check(const NoiseModel& model, const std::vector<Eigen::VectorXd>& directions,
                         std::size_t trials, std::uint64_t seed) {
  model.validate();
  require(trials >= 2, ErrorKind::precondition, "mgf_proxy_check needs trials >= 2");
  for (const auto& v : directions)
    require(v.size() > 0 && std::abs(v.norm() - 1.0) <= 1e-9, ErrorKind::precondition,
            "mgf_proxy_check needs unit-norm directions");
  MgfCheck out;
  if (model.scale == 0.0) return out;  // eta = 0: log MGF is 0 at every lambda
  const double s2 = model.variance_proxy();
  const double multipliers[] = {0.5, 1.0, 2.0};
  for (std::size_t d = 0; d < directions.size(); ++d) {
    const Eigen::VectorXd& v = directions[d];
    std::vector<double> proj(trials);
    parallel_for(trials, [&](std::size_t t) {
      Engine rng = make_engine(seed, d * trials + t);
      Eigen::VectorXd eta(v.size());
      fill_noise(model, rng, eta);
      proj[t] = v.dot(eta);
    });
    for (double m : multipliers) {
      const double lambda = m / model.scale;
      double sum = 0.0, sum2 = 0.0;
      for (double p : proj) {
        const double e = std::exp(lambda * p);
        sum += e;
        sum2 += e * e;
      }
      const double n = static_cast<double>(trials);
      const double mean = sum / n;
      const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
      const double target = 0.5 * s2 * lambda * lambda;
      MgfEntry e;
      e.direction = d;
      e.lambda = lambda;
      e.ratio = std::log(mean) / target;
      // Delta method: se(log mean) = sd / (mean sqrt(n)).
      e.slack = 4.0 * std::sqrt(var / n) / mean / target;
      out.worst_ratio = std::max(out.worst_ratio, e.ratio);
      if (e.ratio > 1.0 + e.slack) out.certified = false;
      out.entries.push_back(e);
    }
  }
  return out;
}

}  // namespace gscert
