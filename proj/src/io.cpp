// SPDX-License-Identifier: Apache-2.0
#include "gscert/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gscert/error.hpp"

namespace gscert {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  require(!in.bad(), ErrorKind::io, "error while reading '" + path + "'");
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write '" + path + "'");
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::io, "error while writing '" + path + "'");
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// JSON has no non-finite numbers; those are written as strings.
Json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double get_number(const Json& j, const std::string& key, const std::string& where) {
  require(j.contains(key), ErrorKind::config, where + ": missing '" + key + "'");
  const Json& v = j.at(key);
  require(v.is_number(), ErrorKind::config, where + ": '" + key + "' must be a number");
  return v.get<double>();
}

template <std::size_t K>
std::array<double, K> get_array(const Json& j, const std::string& key, const std::string& where) {
  require(j.contains(key), ErrorKind::config, where + ": missing '" + key + "'");
  const Json& v = j.at(key);
  require(v.is_array() && v.size() == K, ErrorKind::config,
          where + ": '" + key + "' must be an array of " + std::to_string(K) + " numbers");
  std::array<double, K> out{};
  for (std::size_t k = 0; k < K; ++k) {
    require(v[k].is_number(), ErrorKind::config, where + ": '" + key + "' must hold numbers");
    out[k] = v[k].get<double>();
  }
  return out;
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return it.key() == k; });
    require(ok, ErrorKind::config, where + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace

Json to_json(const DomainBox& d) {
  return Json{{"position_lo", d.position_lo}, {"position_hi", d.position_hi},
              {"color_lo", d.color_lo},       {"color_hi", d.color_hi},
              {"alpha_lo", d.alpha_lo},       {"alpha_hi", d.alpha_hi},
              {"cov_eig_lo", d.cov_eig_lo},   {"cov_eig_hi", d.cov_eig_hi}};
}

DomainBox domain_from_json(const Json& j) {
  require(j.is_object(), ErrorKind::config, "domain must be a table/object");
  reject_unknown(j,
                 {"position_lo", "position_hi", "color_lo", "color_hi", "alpha_lo", "alpha_hi",
                  "cov_eig_lo", "cov_eig_hi"},
                 "domain");
  DomainBox d;
  auto opt = [&](const char* key, double& field) {
    if (j.contains(key)) field = get_number(j, key, "domain");
  };
  opt("position_lo", d.position_lo);
  opt("position_hi", d.position_hi);
  opt("color_lo", d.color_lo);
  opt("color_hi", d.color_hi);
  opt("alpha_lo", d.alpha_lo);
  opt("alpha_hi", d.alpha_hi);
  opt("cov_eig_lo", d.cov_eig_lo);
  opt("cov_eig_hi", d.cov_eig_hi);
  d.validate();
  return d;
}

Json to_json(const Scene& z) {
  Json blocks = Json::array();
  for (const auto& b : z.blocks)
    blocks.push_back(Json{{"position", b.position}, {"cov", b.cov}, {"color", b.color},
                          {"alpha", b.alpha}});
  return Json{{"domain", to_json(z.domain)}, {"blocks", blocks}};
}

Scene scene_from_json(const Json& j) {
  require(j.is_object(), ErrorKind::config, "scene document must be a JSON object");
  reject_unknown(j, {"domain", "blocks"}, "scene");
  Scene z;
  if (j.contains("domain")) z.domain = domain_from_json(j.at("domain"));
  require(j.contains("blocks") && j.at("blocks").is_array(), ErrorKind::config,
          "scene: 'blocks' must be an array");
  const Json& blocks = j.at("blocks");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string where = "scene block " + std::to_string(i);
    const Json& s = blocks[i];
    require(s.is_object(), ErrorKind::config, where + " must be an object");
    reject_unknown(s, {"position", "cov", "color", "alpha"}, where);
    SplatBlock b;
    b.position = get_array<2>(s, "position", where);
    b.cov = get_array<3>(s, "cov", where);
    b.color = get_array<3>(s, "color", where);
    b.alpha = get_number(s, "alpha", where);
    z.blocks.push_back(b);
  }
  validate_scene(z);
  return z;
}

Scene load_scene(const std::string& path) {
  const std::string text = read_text(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, "scene '" + path + "' is not valid JSON: " + e.what());
  }
  return scene_from_json(j);
}

void save_scene(const std::string& path, const Scene& z) { write_text(path, dump(to_json(z))); }

void write_ppm(const std::string& path, const Image& image) {
  const auto& g = image.grid;
  std::string data = "P6\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
  data.reserve(data.size() + g.entries());
  for (Eigen::Index k = 0; k < image.values.size(); ++k) {
    const double v = std::clamp(image.values[k], 0.0, 1.0);
    data.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  write_text(path, data);
}

std::string image_csv(const Image& image) {
  std::string out = "row,col,channel,value\n";
  const auto& g = image.grid;
  for (std::size_t row = 0; row < g.height; ++row)
    for (std::size_t col = 0; col < g.width; ++col)
      for (std::size_t ch = 0; ch < kChannels; ++ch)
        out += std::to_string(row) + "," + std::to_string(col) + "," + std::to_string(ch) + "," +
               format_double(image.at(row, col, ch)) + "\n";
  return out;
}

void write_image_csv(const std::string& path, const Image& image) {
  write_text(path, image_csv(image));
}

Json to_json(const NoiseModel& m) {
  Json j{{"kind", to_string(m.kind)},
         {"scale", num(m.scale)},
         {"variance_proxy", num(m.variance_proxy())}};
  j["truncation"] = m.truncation ? num(*m.truncation) : Json(nullptr);
  return j;
}

Json to_json(const BlockConstantBreakdown& k) {
  return Json{{"C_x", num(k.C_x)},
              {"C_Sigma", num(k.C_Sigma)},
              {"C_c", num(k.C_c)},
              {"C_alpha", num(k.C_alpha)},
              {"G_i", num(k.G())}};
}

Json to_json(const ConstantsReport& r) {
  Json per = Json::array();
  for (const auto& k : r.per_block) per.push_back(to_json(k));
  Json emp = Json::array();
  for (double v : r.empirical_G) emp.push_back(num(v));
  Json j{{"operator", r.operator_name},
         {"grid", r.grid_id},
         {"domain_hash", hex64(r.domain_hash)},
         {"N", r.N},
         {"B", num(r.B)},
         {"G", num(r.G)},
         {"L", num(r.L)},
         {"per_block", per},
         {"empirical_G", emp}};
  j["empirical_L"] = r.empirical_L ? num(*r.empirical_L) : Json(nullptr);
  return j;
}

Json to_json(const SupremumEstimate& e) {
  return Json{{"supremum", num(e.supremum)},
              {"pairs", e.pairs},
              {"skipped", e.skipped},
              {"violations", e.above}};
}

Json to_json(const LipschitzCertification& c) {
  Json blocks = Json::array();
  for (const auto& b : c.blocks) {
    Json e = to_json(b.estimate);
    e["block"] = b.block;
    e["G_i"] = num(b.G_i);
    blocks.push_back(e);
  }
  Json m = to_json(c.misfit);
  m["L"] = num(c.L);
  return Json{{"blocks", blocks}, {"misfit", m}, {"passed", c.passed}};
}

Json to_json(const StabilityEstimate& s) {
  return Json{{"grid", s.grid_id},
              {"M", s.pixels},
              {"gauge", to_string(s.gauge)},
              {"jacobian_columns", s.jacobian_columns},
              {"sigma_min", num(s.sigma_min)},
              {"sigma_max", num(s.sigma_max)},
              {"lambda_eff", num(s.lambda_eff)},
              {"kappa_hat", num(s.kappa_hat)},
              {"r0_hat", num(s.r0_hat)},
              {"kappa_fraction", num(s.kappa_fraction)},
              {"radius_max", num(s.radius_max)},
              {"growth_samples", s.growth_samples},
              {"certified", s.certified}};
}

Json to_json(const MomentReport& r) {
  return Json{{"trials", r.trials},
              {"exact_gap", num(r.exact_gap)},
              {"sample_mean", num(r.sample_mean)},
              {"sample_sd", num(r.sample_sd)},
              {"z_score", num(r.z_score)},
              {"passed", r.passed}};
}

Json to_json(const ConcentrationReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back(Json{{"t", num(row.t)},
                        {"exceedances", row.exceedances},
                        {"frequency", num(row.frequency)},
                        {"upper_limit_99", num(row.upper_limit)},
                        {"bound", num(row.bound)},
                        {"passed", row.passed}});
  return Json{{"noise", to_json(r.noise)},
              {"declared", to_json(r.declared)},
              {"trials", r.trials},
              {"sigma2", num(r.sigma2)},
              {"G", num(r.G)},
              {"N", r.N},
              {"d2", num(r.d)},
              {"K", num(r.K)},
              {"exact_gap", num(r.exact_gap)},
              {"expected_noise_energy", num(r.expected_energy)},
              {"rows", rows},
              {"passed", r.passed}};
}

Json to_json(const BoundValidationReport& r) {
  return Json{{"trials", r.records.size()},
              {"step", num(r.step)},
              {"included", r.included},
              {"excluded", r.excluded},
              {"det_violations", r.det_violations},
              {"hp_holds", r.hp_holds},
              {"hp_fraction", num(r.hp_fraction)},
              {"required_fraction", num(r.required_fraction)},
              {"max_identity_error", num(r.max_identity_error)},
              {"passed", r.passed}};
}

Json to_json(const BoundReport& r) {
  const auto& in = r.inputs;
  return Json{{"inputs",
               Json{{"kappa", num(in.kappa)},
                    {"eps_eta", num(in.eps_eta)},
                    {"misfit_gap", num(in.misfit_gap)},
                    {"expected_gap", num(in.expected_gap)},
                    {"L", num(in.L)},
                    {"sigma2", num(in.sigma2)},
                    {"G", num(in.G)},
                    {"N", in.N},
                    {"M", in.M},
                    {"d", num(in.d)},
                    {"delta", num(in.delta)},
                    {"lambda_eff", num(in.lambda_eff)}}},
              {"det_radius", num(r.det_radius)},
              {"det_envelope", num(r.det_envelope)},
              {"t", num(r.t)},
              {"hp_radius", num(r.hp_radius)},
              {"confidence", num(r.confidence)},
              {"tail_prob", num(r.tail_prob)},
              {"tail_prob_unclamped", num(r.tail_prob_raw)},
              {"C_stab", num(r.C_stab)},
              {"tradeoff_floor", num(r.tradeoff_floor)},
              {"tradeoff_floor_note",
               "absorbed constants set to 1; the floor grows with M as the formula states, "
               "while the accompanying prose says higher resolution lowers it"}};
}

Json to_json(const SweepResult& r) {
  Json cols = Json::object();
  Json vals = Json::array();
  for (double v : r.values) vals.push_back(num(v));
  for (const auto& c : r.columns) {
    Json a = Json::array();
    for (double v : c.second) a.push_back(num(v));
    cols[c.first] = a;
  }
  return Json{{"variable", r.variable},
              {"values", vals},
              {"columns", cols},
              {"fitted", r.fitted},
              {"slope", num(r.fit.slope)},
              {"slope_se", num(r.fit.slope_se)},
              {"lambda_variation", num(r.lambda_variation)},
              {"empirical_within_L", r.empirical_within_L}};
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
  std::string out =
      "trial,seed,eps_eta,F_star,F_hat,d2,misfit_gap,expected_gap,det_radius,t,hp_radius,"
      "confidence,included,det_holds,hp_holds\n";
  for (const auto& r : records) {
    out += std::to_string(r.index) + "," + std::to_string(r.seed) + "," + format_double(r.eps_eta) +
           "," + format_double(r.F_star) + "," + format_double(r.F_hat) + "," +
           format_double(r.d2) + "," + format_double(r.misfit_gap) + "," +
           format_double(r.expected_gap) + "," + format_double(r.det_radius) + "," +
           format_double(r.t) + "," + format_double(r.hp_radius) + "," +
           format_double(r.confidence) + "," + (r.included ? "1" : "0") + "," +
           (r.det_holds ? "1" : "0") + "," + (r.hp_holds ? "1" : "0") + "\n";
  }
  return out;
}

std::string sweep_csv(const SweepResult& r) {
  std::string out = r.variable;
  for (const auto& c : r.columns) out += "," + c.first;
  out += ",slope,slope_se\n";
  for (std::size_t k = 0; k < r.values.size(); ++k) {
    out += format_double(r.values[k]);
    for (const auto& c : r.columns) out += "," + format_double(c.second[k]);
    out += "," + format_double(r.fit.slope) + "," + format_double(r.fit.slope_se) + "\n";
  }
  return out;
}

std::string tradeoff_csv(const std::vector<TradeoffRow>& rows, double lambda_eff, double G) {
  std::string out = "M,N,lambda_eff,G,floor\n";
  for (const auto& r : rows)
    out += std::to_string(r.M) + "," + std::to_string(r.N) + "," + format_double(lambda_eff) + "," +
           format_double(G) + "," + format_double(r.floor) + "\n";
  return out;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace gscert
