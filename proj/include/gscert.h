/* SPDX-License-Identifier: Apache-2.0 */
#ifndef GSCERT_H
#define GSCERT_H

/* C interface to the gscert library: scenes, rendering, scalar bounds and the
 * four commands. Every function returning gscert_status sets a thread-local
 * message retrievable with gscert_last_error() on failure. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GSCERT_BUILDING)
#    define GSCERT_API __declspec(dllexport)
#  else
#    define GSCERT_API __declspec(dllimport)
#  endif
#else
#  define GSCERT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gscert_status {
  GSCERT_OK = 0,
  GSCERT_ERR_INTERNAL = 1,
  GSCERT_ERR_CONFIG = 2, /* config, I/O or precondition */
  GSCERT_ERR_CERTIFICATION = 3,
  GSCERT_ERR_VERIFICATION = 4,
  GSCERT_ERR_INVALID_ARGUMENT = 5,
  GSCERT_ERR_NUMERIC = 6
} gscert_status;

typedef struct gscert_scene gscert_scene;
typedef struct gscert_image gscert_image;

GSCERT_API const char* gscert_version(void);
GSCERT_API const char* gscert_last_error(void);
GSCERT_API const char* gscert_status_string(gscert_status status);
/* Every config key with its default, as shown by `gscert --help`. */
GSCERT_API const char* gscert_config_reference(void);
/* 0 = hardware concurrency. */
GSCERT_API void gscert_set_threads(unsigned threads);

/* --- scenes --- */
GSCERT_API gscert_status gscert_scene_load(const char* path, gscert_scene** out);
GSCERT_API gscert_status gscert_scene_from_json(const char* json, gscert_scene** out);
/* Caller frees the returned string with gscert_string_free. */
GSCERT_API gscert_status gscert_scene_to_json(const gscert_scene* scene, char** out);
GSCERT_API gscert_status gscert_scene_save(const gscert_scene* scene, const char* path);
/* Uniform draw of `splats` blocks from the default domain. */
GSCERT_API gscert_status gscert_scene_sample(size_t splats, uint64_t seed, gscert_scene** out);
GSCERT_API size_t gscert_scene_size(const gscert_scene* scene);
/* 9 * size doubles: [x0, x1, a, b, c, r, g, b, alpha] per splat. */
GSCERT_API gscert_status gscert_scene_parameters(const gscert_scene* scene, double* out,
                                                 size_t capacity);
GSCERT_API gscert_status gscert_scene_distance(const gscert_scene* a, const gscert_scene* b,
                                               double* out);
GSCERT_API void gscert_scene_free(gscert_scene* scene);
GSCERT_API void gscert_string_free(char* s);

/* --- rendering --- */
GSCERT_API gscert_status gscert_render(const gscert_scene* scene, size_t width, size_t height,
                                       gscert_image** out);
GSCERT_API size_t gscert_image_width(const gscert_image* image);
GSCERT_API size_t gscert_image_height(const gscert_image* image);
/* Row-major, channels interleaved; 3 * width * height entries. */
GSCERT_API const double* gscert_image_data(const gscert_image* image);
GSCERT_API double gscert_image_norm(const gscert_image* image);
GSCERT_API gscert_status gscert_image_write_ppm(const gscert_image* image, const char* path);
GSCERT_API gscert_status gscert_image_write_csv(const gscert_image* image, const char* path);
GSCERT_API gscert_status gscert_misfit(const gscert_scene* scene, const gscert_image* observed,
                                       double* out);
GSCERT_API void gscert_image_free(gscert_image* image);

/* --- constants and bounds --- */
GSCERT_API gscert_status gscert_output_bound(size_t splats, size_t width, size_t height,
                                             double* out);
GSCERT_API gscert_status gscert_misfit_lipschitz(double B, double G, size_t splats, double* out);
GSCERT_API gscert_status gscert_det_bound(double kappa, double eps_eta, double misfit_gap,
                                          double* out);
GSCERT_API gscert_status gscert_concentration_tail(double t, double sigma2, double G,
                                                   size_t splats, double d, double* out);
GSCERT_API gscert_status gscert_tradeoff_floor(double lambda_eff, double G, size_t pixels,
                                               size_t splats, double* out);

/* --- commands --- */
typedef struct gscert_command_options {
  const char* config_path; /* NULL or "" = built-in defaults */
  const char* out_dir;     /* NULL = "." */
  uint64_t seed;
  int has_seed; /* nonzero: seed overrides the config */
  unsigned threads;
} gscert_command_options;

/* Return values are process exit codes (0, 1, 2, 3, 4). Reports go to out_dir;
 * the human-readable summary goes to stdout and diagnostics to stderr. */
GSCERT_API int gscert_cmd_render(const gscert_command_options* options);
GSCERT_API int gscert_cmd_certify(const gscert_command_options* options);
GSCERT_API int gscert_cmd_verify(const gscert_command_options* options);
GSCERT_API int gscert_cmd_sweep(const gscert_command_options* options);

#ifdef __cplusplus
}
#endif

#endif /* GSCERT_H */
