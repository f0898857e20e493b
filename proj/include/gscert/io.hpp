// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scene documents, image exports and report serialization.

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "gscert/bounds.hpp"
#include "gscert/constants.hpp"
#include "gscert/experiments.hpp"
#include "gscert/forward.hpp"
#include "gscert/noise.hpp"
#include "gscert/observability.hpp"
#include "gscert/param_space.hpp"

namespace gscert {

using Json = nlohmann::ordered_json;

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// printf("%.17g"); non-finite values print as nan / inf / -inf.
std::string format_double(double v);

// Scene document:
//   {"domain": {"position_lo": 0, ...},            (optional; defaults otherwise)
//    "splats": [{"position": [x0, x1], "cov": [a, b, c],
//                "color": [r, g, b], "alpha": a}, ...]}
Json to_json(const DomainBox& d);
DomainBox domain_from_json(const Json& j);
Json to_json(const Scene& z);
/// Raises config errors for malformed documents and precondition errors for
/// infeasible scenes.
Scene scene_from_json(const Json& j);
Scene load_scene(const std::string& path);
void save_scene(const std::string& path, const Scene& z);

/// Binary P6, maxval 255, entries clamped to [0, 1] then scaled and rounded.
void write_ppm(const std::string& path, const Image& image);
/// `row,col,channel,value` with 17 significant digits.
void write_image_csv(const std::string& path, const Image& image);
std::string image_csv(const Image& image);

Json to_json(const NoiseModel& m);
Json to_json(const BlockConstantBreakdown& k);
Json to_json(const ConstantsReport& r);
Json to_json(const SupremumEstimate& e);
Json to_json(const LipschitzCertification& c);
Json to_json(const StabilityEstimate& s);
Json to_json(const MomentReport& r);
Json to_json(const ConcentrationReport& r);
Json to_json(const BoundValidationReport& r);
Json to_json(const BoundReport& r);
Json to_json(const SweepResult& r);

std::string trials_csv(const std::vector<TrialRecord>& records);
std::string sweep_csv(const SweepResult& r);
std::string tradeoff_csv(const std::vector<TradeoffRow>& rows, double lambda_eff, double G);

/// Pretty-printed with two-space indent and a trailing newline.
std::string dump(const Json& j);

}  // namespace gscert
