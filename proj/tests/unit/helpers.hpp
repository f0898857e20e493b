// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "gscert/param_space.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline gscert::SplatBlock splat(double x0, double x1, double a, double b, double c,
                                std::array<double, 3> color, double alpha) {
  gscert::SplatBlock s;
  s.position = {x0, x1};
  s.cov = {a, b, c};
  s.color = color;
  s.alpha = alpha;
  return s;
}

inline gscert::Scene scene(std::initializer_list<gscert::SplatBlock> blocks) {
  gscert::Scene z;
  z.blocks = blocks;
  return z;
}

inline gscert::Scene three_splats() {
  return scene({splat(0.3, 0.35, 0.015, 0.004, 0.012, {0.9, 0.4, 0.2}, 0.8),
                splat(0.68, 0.4, 0.02, -0.005, 0.014, {0.2, 0.8, 0.5}, 0.7),
                splat(0.5, 0.7, 0.012, 0.002, 0.018, {0.5, 0.3, 0.9}, 0.6)});
}

}  // namespace testutil
