// SPDX-License-Identifier: Apache-2.0
#include "gscert/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>

#include "gscert/error.hpp"
#include "gscert/runtime.hpp"

namespace gscert {

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  Json parse() {
    Json root = Json::object();
    Json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = &open_table(root);
      } else {
        parse_key_value(*table);
      }
      end_of_line();
    }
    return root;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::set<std::string> defined_tables_;

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::config, "config line " + std::to_string(line_) + ": " + msg);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  char get() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  void skip_blank_lines() {
    while (true) {
      skip_ws();
      skip_comment();
      if (!eof() && peek() == '\n') {
        get();
        continue;
      }
      return;
    }
  }
  // Whitespace, comments and newlines (inside arrays).
  void skip_all() {
    while (true) {
      skip_ws();
      skip_comment();
      if (!eof() && peek() == '\n') {
        get();
        continue;
      }
      return;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') error("unexpected text after value");
    get();
  }

  static bool bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
  }

  std::string parse_simple_key() {
    skip_ws();
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    const std::size_t start = pos_;
    while (!eof() && bare_char(peek())) ++pos_;
    if (pos_ == start) error("expected a key");
    return s_.substr(start, pos_ - start);
  }

  std::vector<std::string> parse_dotted_key() {
    std::vector<std::string> parts{parse_simple_key()};
    skip_ws();
    while (peek() == '.') {
      ++pos_;
      parts.push_back(parse_simple_key());
      skip_ws();
    }
    return parts;
  }

  Json& descend(Json& root, const std::vector<std::string>& path, std::size_t count) {
    Json* node = &root;
    for (std::size_t k = 0; k < count; ++k) {
      Json& child = (*node)[path[k]];
      if (child.is_null()) child = Json::object();
      if (!child.is_object()) error("'" + path[k] + "' is not a table");
      node = &child;
    }
    return *node;
  }

  Json& open_table(Json& root) {
    get();  // [
    if (peek() == '[') error("arrays of tables are not supported");
    const auto path = parse_dotted_key();
    skip_ws();
    if (peek() != ']') error("expected ']' after table name");
    get();
    std::string name;
    for (const auto& p : path) name += (name.empty() ? "" : ".") + p;
    if (!defined_tables_.insert(name).second) error("table [" + name + "] defined twice");
    return descend(root, path, path.size());
  }

  void parse_key_value(Json& table) {
    const auto path = parse_dotted_key();
    skip_ws();
    if (peek() != '=') error("expected '=' after key");
    get();
    skip_ws();
    Json& parent = descend(table, path, path.size() - 1);
    if (parent.contains(path.back())) error("key '" + path.back() + "' defined twice");
    parent[path.back()] = parse_value();
  }

  Json parse_value() {
    if (eof()) error("missing value");
    const char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    if (c == '{') error("inline tables are not supported");
    return parse_scalar();
  }

  std::string parse_basic_string() {
    get();  // "
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') error("unterminated string");
      const char c = get();
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (eof()) error("unterminated escape");
      const char e = get();
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        default: error(std::string("unsupported escape '\\") + e + "'");
      }
    }
  }

  std::string parse_literal_string() {
    get();  // '
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') error("unterminated string");
      const char c = get();
      if (c == '\'') return out;
      out.push_back(c);
    }
  }

  Json parse_array() {
    get();  // [
    Json arr = Json::array();
    while (true) {
      skip_all();
      if (eof()) error("unterminated array");
      if (peek() == ']') {
        get();
        return arr;
      }
      arr.push_back(parse_value());
      skip_all();
      if (peek() == ',') {
        get();
        continue;
      }
      if (peek() == ']') {
        get();
        return arr;
      }
      error("expected ',' or ']' in array");
    }
  }

  Json parse_scalar() {
    const std::size_t start = pos_;
    while (!eof() && (bare_char(peek()) || peek() == '.' || peek() == '+')) ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    if (tok.empty()) error("expected a value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string t;
    for (std::size_t k = 0; k < tok.size(); ++k) {
      if (tok[k] != '_') {
        t.push_back(tok[k]);
        continue;
      }
      const bool ok = k > 0 && k + 1 < tok.size() && std::isdigit(static_cast<unsigned char>(tok[k - 1])) &&
                      std::isdigit(static_cast<unsigned char>(tok[k + 1]));
      if (!ok) error("misplaced '_' in number '" + tok + "'");
    }
    const std::string body = (t[0] == '+' || t[0] == '-') ? t.substr(1) : t;
    const bool neg = t[0] == '-';
    if (body == "inf") return neg ? -std::numeric_limits<double>::infinity()
                                  : std::numeric_limits<double>::infinity();
    if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (body.empty() || !std::isdigit(static_cast<unsigned char>(body[0])))
      error("invalid value '" + tok + "'");
    const bool is_float = t.find_first_of(".eE") != std::string::npos;
    errno = 0;
    char* end = nullptr;
    if (is_float) {
      const double v = std::strtod(t.c_str(), &end);
      if (*end != '\0' || errno == ERANGE) error("invalid float '" + tok + "'");
      return v;
    }
    if (body.size() > 1 && body[0] == '0') error("leading zeros are not allowed in '" + tok + "'");
    if (neg) {
      const long long v = std::strtoll(t.c_str(), &end, 10);
      if (*end != '\0' || errno == ERANGE) error("invalid integer '" + tok + "'");
      return v;
    }
    const unsigned long long v = std::strtoull(body.c_str(), &end, 10);
    if (*end != '\0' || errno == ERANGE) error("invalid integer '" + tok + "'");
    return static_cast<std::uint64_t>(v);
  }
};

// ---- typed accessors --------------------------------------------------------

std::string where_of(const std::string& table, const std::string& key) {
  return table.empty() ? key : table + "." + key;
}

double as_double(const Json& v, const std::string& where) {
  require(v.is_number(), ErrorKind::config, where + " must be a number");
  return v.get<double>();
}

std::uint64_t as_uint(const Json& v, const std::string& where) {
  require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
          ErrorKind::config, where + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string as_string(const Json& v, const std::string& where) {
  require(v.is_string(), ErrorKind::config, where + " must be a string");
  return v.get<std::string>();
}

std::vector<std::size_t> as_uint_list(const Json& v, const std::string& where) {
  require(v.is_array(), ErrorKind::config, where + " must be an array of integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) out.push_back(static_cast<std::size_t>(as_uint(e, where)));
  return out;
}

void check_keys(const Json& table, const std::string& name,
                std::initializer_list<const char*> known) {
  require(table.is_object(), ErrorKind::config, "[" + name + "] must be a table");
  for (auto it = table.begin(); it != table.end(); ++it) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return it.key() == k; });
    require(ok, ErrorKind::config,
            "unknown key '" + where_of(name, it.key()) + "' in configuration");
  }
}

}  // namespace

Json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

Gauge RunConfig::effective_gauge() const {
  if (gauge) return *gauge;
  return model == ModelKind::linear ? Gauge::none : Gauge::opacity;
}

NoiseModel RunConfig::declared_noise() const {
  NoiseModel d = noise;
  if (declared_scale) d.scale = *declared_scale;
  return d;
}

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const std::string& text) {
  const Json root = parse_toml(text);
  RunConfig c;
  check_keys(root, "",
             {"seed", "scene", "model", "grid", "domain", "noise", "certify", "verify", "sweep"});
  if (root.contains("seed")) c.seed = as_uint(root["seed"], "seed");

  if (root.contains("scene")) {
    const Json& t = root["scene"];
    check_keys(t, "scene", {"source", "path", "splats", "margin"});
    if (t.contains("source")) {
      const std::string s = as_string(t["source"], "scene.source");
      if (s == "default" || s == "single") c.scene_source = SceneSource::single;
      else if (s == "file") c.scene_source = SceneSource::file;
      else if (s == "random") c.scene_source = SceneSource::random;
      else fail(ErrorKind::config, "scene.source must be default, file or random");
    }
    if (t.contains("path")) {
      c.scene_path = as_string(t["path"], "scene.path");
      if (!t.contains("source")) c.scene_source = SceneSource::file;
    }
    if (t.contains("splats")) c.scene_splats = as_uint(t["splats"], "scene.splats");
    if (t.contains("margin")) c.scene_margin = as_double(t["margin"], "scene.margin");
  }

  if (root.contains("model")) {
    const Json& t = root["model"];
    check_keys(t, "model", {"kind", "linear_blocks", "linear_sigma_min", "linear_sigma_max"});
    if (t.contains("kind")) {
      const std::string s = as_string(t["kind"], "model.kind");
      if (s == "gs" || s == "gaussian-splat") c.model = ModelKind::gaussian_splat;
      else if (s == "linear" || s == "linear-oracle") c.model = ModelKind::linear;
      else fail(ErrorKind::config, "model.kind must be gs or linear");
    }
    if (t.contains("linear_blocks")) c.linear_blocks = as_uint(t["linear_blocks"], "model.linear_blocks");
    if (t.contains("linear_sigma_min"))
      c.linear_sigma_min = as_double(t["linear_sigma_min"], "model.linear_sigma_min");
    if (t.contains("linear_sigma_max"))
      c.linear_sigma_max = as_double(t["linear_sigma_max"], "model.linear_sigma_max");
  }

  if (root.contains("grid")) {
    const Json& t = root["grid"];
    check_keys(t, "grid", {"width", "height"});
    std::size_t w = c.grid.width, h = c.grid.height;
    if (t.contains("width")) w = as_uint(t["width"], "grid.width");
    if (t.contains("height")) h = as_uint(t["height"], "grid.height");
    require(w >= 1 && h >= 1, ErrorKind::config, "grid width and height must be >= 1");
    c.grid = ImageGrid(w, h);
  }

  if (root.contains("domain")) {
    try {
      c.domain = domain_from_json(root["domain"]);
    } catch (const Error& e) {
      fail(ErrorKind::config, std::string("[domain]: ") + e.what());
    }
  }

  if (root.contains("noise")) {
    const Json& t = root["noise"];
    check_keys(t, "noise", {"kind", "scale", "declared_scale", "truncation"});
    if (t.contains("kind")) c.noise.kind = parse_noise_kind(as_string(t["kind"], "noise.kind"));
    if (t.contains("scale")) c.noise.scale = as_double(t["scale"], "noise.scale");
    if (t.contains("declared_scale"))
      c.declared_scale = as_double(t["declared_scale"], "noise.declared_scale");
    if (t.contains("truncation")) c.noise.truncation = as_double(t["truncation"], "noise.truncation");
    try {
      c.noise.validate();
      c.declared_noise().validate();
    } catch (const Error& e) {
      fail(ErrorKind::config, std::string("[noise]: ") + e.what());
    }
  }

  if (root.contains("certify")) {
    const Json& t = root["certify"];
    check_keys(t, "certify",
               {"lipschitz_trials", "radius_max", "growth_samples", "kappa_fraction", "gauge"});
    if (t.contains("lipschitz_trials"))
      c.lipschitz_trials = as_uint(t["lipschitz_trials"], "certify.lipschitz_trials");
    if (t.contains("radius_max")) c.radius_max = as_double(t["radius_max"], "certify.radius_max");
    if (t.contains("growth_samples"))
      c.growth_samples = as_uint(t["growth_samples"], "certify.growth_samples");
    if (t.contains("kappa_fraction"))
      c.kappa_fraction = as_double(t["kappa_fraction"], "certify.kappa_fraction");
    if (t.contains("gauge")) c.gauge = parse_gauge(as_string(t["gauge"], "certify.gauge"));
  }

  if (root.contains("verify")) {
    const Json& t = root["verify"];
    check_keys(t, "verify",
               {"moment_trials", "concentration_trials", "t_values", "concentration_spread",
                "bound_trials", "delta", "pgd_step", "pgd_iters", "init_perturbation",
                "certify_report"});
    if (t.contains("moment_trials")) c.moment_trials = as_uint(t["moment_trials"], "verify.moment_trials");
    if (t.contains("concentration_trials"))
      c.concentration_trials = as_uint(t["concentration_trials"], "verify.concentration_trials");
    if (t.contains("t_values")) c.t_values = as_uint(t["t_values"], "verify.t_values");
    if (t.contains("concentration_spread"))
      c.concentration_spread = as_double(t["concentration_spread"], "verify.concentration_spread");
    if (t.contains("bound_trials")) c.bound_trials = as_uint(t["bound_trials"], "verify.bound_trials");
    if (t.contains("delta")) c.delta = as_double(t["delta"], "verify.delta");
    if (t.contains("pgd_step")) {
      const Json& v = t["pgd_step"];
      if (v.is_string()) {
        require(v.get<std::string>() == "auto", ErrorKind::config,
                "verify.pgd_step must be a number or \"auto\"");
      } else {
        c.pgd_step = as_double(v, "verify.pgd_step");
      }
    }
    if (t.contains("pgd_iters")) c.pgd_iters = as_uint(t["pgd_iters"], "verify.pgd_iters");
    if (t.contains("init_perturbation"))
      c.init_perturbation = as_double(t["init_perturbation"], "verify.init_perturbation");
    if (t.contains("certify_report"))
      c.certify_report = as_string(t["certify_report"], "verify.certify_report");
  }

  if (root.contains("sweep")) {
    const Json& t = root["sweep"];
    check_keys(t, "sweep", {"resolutions", "splat_counts", "trials"});
    if (t.contains("resolutions")) c.resolutions = as_uint_list(t["resolutions"], "sweep.resolutions");
    if (t.contains("splat_counts")) c.splat_counts = as_uint_list(t["splat_counts"], "sweep.splat_counts");
    if (t.contains("trials")) c.sweep_trials = as_uint(t["trials"], "sweep.trials");
  }

  require(c.delta > 0.0 && c.delta < 1.0, ErrorKind::config, "verify.delta must lie in (0, 1)");
  require(c.radius_max > 0.0 && std::isfinite(c.radius_max), ErrorKind::config,
          "certify.radius_max must be positive");
  require(c.kappa_fraction > 0.0 && c.kappa_fraction <= 1.0, ErrorKind::config,
          "certify.kappa_fraction must lie in (0, 1]");
  require(c.concentration_spread > 0.0 && std::isfinite(c.concentration_spread),
          ErrorKind::config, "verify.concentration_spread must be positive");
  require(c.init_perturbation >= 0.0 && std::isfinite(c.init_perturbation), ErrorKind::config,
          "verify.init_perturbation must be >= 0");
  if (c.pgd_step)
    require(*c.pgd_step > 0.0 && std::isfinite(*c.pgd_step), ErrorKind::config,
            "verify.pgd_step must be positive");
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_text(path)); }

Scene default_single_splat(const DomainBox& domain) {
  Scene z;
  z.domain = domain;
  SplatBlock b;
  b.position = {0.5, 0.5};
  b.cov = {0.012, 0.003, 0.008};
  b.color = {0.9, 0.5, 0.2};
  b.alpha = 0.8;
  z.blocks.push_back(b);
  return z;
}

Scene build_scene(const RunConfig& cfg, std::uint64_t seed) {
  Scene z;
  switch (cfg.scene_source) {
    case SceneSource::single:
      z = default_single_splat(cfg.domain);
      break;
    case SceneSource::file:
      require(!cfg.scene_path.empty(), ErrorKind::config, "scene.source = file needs scene.path");
      z = load_scene(cfg.scene_path);
      break;
    case SceneSource::random: {
      SamplerConfig s;
      s.domain = cfg.domain;
      s.blocks = cfg.model == ModelKind::linear ? cfg.linear_blocks : cfg.scene_splats;
      s.interior_margin = cfg.scene_margin;
      z = sample_scenes(s, derive_seed(seed, 4), 1).front();
      break;
    }
  }
  validate_scene(z);
  return z;
}

std::string config_reference() {
  return R"(Configuration file (TOML subset). Every key is optional except the seed,
which may instead be given with --seed. Defaults:

  seed = <u64>                     required (config or --seed)

  [scene]
  source = "default"               default | file | random
  path = ""                        scene JSON document (source = file)
  splats = 1                       splat count for source = random
  margin = 0.2                     interior margin for source = random

  [model]
  kind = "gs"                      gs | linear
  linear_blocks = 2                blocks of the random linear oracle
  linear_sigma_min = 0.5           its smallest singular value
  linear_sigma_max = 2.0           its largest singular value

  [grid]
  width = 16
  height = 16

  [domain]
  position_lo = 0.0   position_hi = 1.0
  color_lo = 0.0      color_hi = 1.0
  alpha_lo = 0.0      alpha_hi = 1.0
  cov_eig_lo = 0.001  cov_eig_hi = 0.1

  [noise]
  kind = "gaussian"                gaussian | rademacher | uniform
  scale = 0.05
  declared_scale = <scale>         scale assumed by the bounds
  truncation = <none>              energy cap B_eta (redraw above it)

  [certify]
  lipschitz_trials = 10000         pairs per block and general pairs
  radius_max = 0.05                upper end of the r0 search
  growth_samples = 200             random directions per growth check
  kappa_fraction = 0.5             r0 keeps kappa_hat >= fraction * sigma_min
  gauge = "opacity"                opacity | color | none (linear model: none)

  [verify]
  moment_trials = 10000
  concentration_trials = 10000
  t_values = 10
  concentration_spread = 25.0      G^2 N d^2 of the concentration pair
  bound_trials = 100
  delta = 0.05
  pgd_step = "auto"                number, or auto = 1 / (2 sigma_max^2)
  pgd_iters = 200
  init_perturbation = 0.001
  certify_report = ""              default <out>/certify_report.json

  [sweep]
  resolutions = [16, 32, 64, 128]  square grid sides
  splat_counts = [1, 2, 4, 8, 16]
  trials = 1000                    misfit-Lipschitz pairs per N
)";
}

}  // namespace gscert
