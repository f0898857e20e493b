// SPDX-License-Identifier: Apache-2.0
#include "gscert.h"

#include <cstring>
#include <iostream>
#include <string>

#include "gscert/bounds.hpp"
#include "gscert/commands.hpp"
#include "gscert/config.hpp"
#include "gscert/constants.hpp"
#include "gscert/forward.hpp"
#include "gscert/io.hpp"
#include "gscert/param_space.hpp"
#include "gscert/runtime.hpp"

struct gscert_scene {
  gscert::Scene scene;
};

struct gscert_image {
  gscert::Image image;
};

namespace {

thread_local std::string g_last_error;

gscert_status status_for(gscert::ErrorKind kind) {
  using gscert::ErrorKind;
  switch (kind) {
    case ErrorKind::certification: return GSCERT_ERR_CERTIFICATION;
    case ErrorKind::verification: return GSCERT_ERR_VERIFICATION;
    case ErrorKind::numeric: return GSCERT_ERR_NUMERIC;
    case ErrorKind::structure:
    case ErrorKind::precondition:
    case ErrorKind::io:
    case ErrorKind::config: return GSCERT_ERR_CONFIG;
  }
  return GSCERT_ERR_INTERNAL;
}

template <typename Fn>
gscert_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GSCERT_OK;
  } catch (const gscert::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GSCERT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return GSCERT_ERR_INTERNAL;
  }
}

gscert_status invalid(const char* what) {
  g_last_error = std::string("invalid argument: ") + what;
  return GSCERT_ERR_INVALID_ARGUMENT;
}

gscert::CommandOptions to_options(const gscert_command_options* o) {
  gscert::CommandOptions opt;
  if (!o) return opt;
  if (o->config_path) opt.config_path = o->config_path;
  if (o->out_dir) opt.out_dir = o->out_dir;
  if (o->has_seed) opt.seed = o->seed;
  opt.threads = o->threads;
  return opt;
}

template <typename Cmd>
int run_command(Cmd cmd, const gscert_command_options* o) {
  try {
    return cmd(to_options(o), std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

extern "C" {

const char* gscert_version(void) { return gscert::kVersion; }
const char* gscert_last_error(void) { return g_last_error.c_str(); }

const char* gscert_status_string(gscert_status status) {
  switch (status) {
    case GSCERT_OK: return "ok";
    case GSCERT_ERR_INTERNAL: return "internal error";
    case GSCERT_ERR_CONFIG: return "configuration, input or precondition error";
    case GSCERT_ERR_CERTIFICATION: return "certification failure";
    case GSCERT_ERR_VERIFICATION: return "verification failure";
    case GSCERT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GSCERT_ERR_NUMERIC: return "numerical error";
  }
  return "unknown status";
}

const char* gscert_config_reference(void) {
  static const std::string text = gscert::config_reference();
  return text.c_str();
}

void gscert_set_threads(unsigned threads) { gscert::set_thread_limit(threads); }

gscert_status gscert_scene_load(const char* path, gscert_scene** out) {
  if (!path || !out) return invalid("null pointer");
  return guard([&] { *out = new gscert_scene{gscert::load_scene(path)}; });
}

gscert_status gscert_scene_from_json(const char* json, gscert_scene** out) {
  if (!json || !out) return invalid("null pointer");
  return guard([&] {
    gscert::Json j;
    try {
      j = gscert::Json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      gscert::fail(gscert::ErrorKind::structure, std::string("scene JSON: ") + e.what());
    }
    *out = new gscert_scene{gscert::scene_from_json(j)};
  });
}

gscert_status gscert_scene_to_json(const gscert_scene* scene, char** out) {
  if (!scene || !out) return invalid("null pointer");
  return guard([&] {
    const std::string s = gscert::dump(gscert::to_json(scene->scene));
    char* buf = new char[s.size() + 1];
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out = buf;
  });
}

gscert_status gscert_scene_save(const gscert_scene* scene, const char* path) {
  if (!scene || !path) return invalid("null pointer");
  return guard([&] { gscert::save_scene(path, scene->scene); });
}

gscert_status gscert_scene_sample(size_t splats, uint64_t seed, gscert_scene** out) {
  if (!out) return invalid("null pointer");
  return guard([&] {
    *out = new gscert_scene{gscert::sample_scenes(gscert::DomainBox{}, splats, seed, 1).front()};
  });
}

size_t gscert_scene_size(const gscert_scene* scene) { return scene ? scene->scene.size() : 0; }

gscert_status gscert_scene_parameters(const gscert_scene* scene, double* out, size_t capacity) {
  if (!scene || !out) return invalid("null pointer");
  const Eigen::VectorXd v = gscert::to_vector(scene->scene);
  if (capacity < static_cast<size_t>(v.size())) return invalid("buffer too small");
  std::memcpy(out, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
  g_last_error.clear();
  return GSCERT_OK;
}

gscert_status gscert_scene_distance(const gscert_scene* a, const gscert_scene* b, double* out) {
  if (!a || !b || !out) return invalid("null pointer");
  return guard([&] { *out = gscert::d2_distance(a->scene, b->scene); });
}

void gscert_scene_free(gscert_scene* scene) { delete scene; }
void gscert_string_free(char* s) { delete[] s; }

gscert_status gscert_render(const gscert_scene* scene, size_t width, size_t height,
                            gscert_image** out) {
  if (!scene || !out) return invalid("null pointer");
  return guard([&] {
    *out = new gscert_image{gscert::render(scene->scene, gscert::ImageGrid(width, height))};
  });
}

size_t gscert_image_width(const gscert_image* image) { return image ? image->image.grid.width : 0; }
size_t gscert_image_height(const gscert_image* image) {
  return image ? image->image.grid.height : 0;
}
const double* gscert_image_data(const gscert_image* image) {
  return image ? image->image.values.data() : nullptr;
}
double gscert_image_norm(const gscert_image* image) { return image ? image->image.norm() : 0.0; }

gscert_status gscert_image_write_ppm(const gscert_image* image, const char* path) {
  if (!image || !path) return invalid("null pointer");
  return guard([&] { gscert::write_ppm(path, image->image); });
}

gscert_status gscert_image_write_csv(const gscert_image* image, const char* path) {
  if (!image || !path) return invalid("null pointer");
  return guard([&] { gscert::write_image_csv(path, image->image); });
}

gscert_status gscert_misfit(const gscert_scene* scene, const gscert_image* observed, double* out) {
  if (!scene || !observed || !out) return invalid("null pointer");
  return guard([&] {
    *out = gscert::misfit(scene->scene, gscert::Observation{observed->image, {}, {}});
  });
}

void gscert_image_free(gscert_image* image) { delete image; }

gscert_status gscert_output_bound(size_t splats, size_t width, size_t height, double* out) {
  if (!out) return invalid("null pointer");
  return guard([&] {
    *out = gscert::analytic_output_bound(gscert::DomainBox{}, splats,
                                         gscert::ImageGrid(width, height));
  });
}

gscert_status gscert_misfit_lipschitz(double B, double G, size_t splats, double* out) {
  if (!out) return invalid("null pointer");
  return guard([&] { *out = gscert::global_misfit_lipschitz(B, G, splats); });
}

gscert_status gscert_det_bound(double kappa, double eps_eta, double misfit_gap, double* out) {
  if (!out) return invalid("null pointer");
  return guard([&] { *out = gscert::det_stability_bound(kappa, eps_eta, misfit_gap); });
}

gscert_status gscert_concentration_tail(double t, double sigma2, double G, size_t splats, double d,
                                        double* out) {
  if (!out) return invalid("null pointer");
  return guard([&] { *out = gscert::concentration_tail(t, sigma2, G, splats, d); });
}

gscert_status gscert_tradeoff_floor(double lambda_eff, double G, size_t pixels, size_t splats,
                                    double* out) {
  if (!out) return invalid("null pointer");
  return guard([&] { *out = gscert::tradeoff_floor(lambda_eff, G, pixels, splats); });
}

int gscert_cmd_render(const gscert_command_options* o) { return run_command(gscert::cmd_render, o); }
int gscert_cmd_certify(const gscert_command_options* o) {
  return run_command(gscert::cmd_certify, o);
}
int gscert_cmd_verify(const gscert_command_options* o) { return run_command(gscert::cmd_verify, o); }
int gscert_cmd_sweep(const gscert_command_options* o) { return run_command(gscert::cmd_sweep, o); }

}  // extern "C"
