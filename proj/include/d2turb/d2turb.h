/* d2turb: depth-aware atmospheric turbulence degradation engine. */
#ifndef D2TURB_D2TURB_H
#define D2TURB_D2TURB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define D2T_API __declspec(dllimport)
#elif defined(D2TURB_BUILDING)
#define D2T_API __attribute__((visibility("default")))
#else
#define D2T_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum d2t_status {
  D2T_OK = 0,
  D2T_E_INVALID_INPUT = 1,
  D2T_E_DOMAIN = 2,
  D2T_E_SHAPE = 3,
  D2T_E_NORMALIZATION = 4,
  D2T_E_INTERNAL = 5,
  D2T_E_UNFILLABLE = 6,
  D2T_E_IO = 7,
  D2T_E_FORMAT = 8,
  D2T_E_PARSE = 9,
  D2T_E_CONFIG = 10,
  D2T_E_INTEGRITY = 11,
  D2T_E_NULL_ARGUMENT = 100,
  D2T_E_PARTIAL = 101 /* completed with skipped inputs */
} d2t_status;

/* Message of the last failed call on this thread; "" if none. */
D2T_API const char* d2t_last_error(void);
D2T_API const char* d2t_status_name(d2t_status status);
D2T_API const char* d2t_version(void);

/* Strings returned through char** are owned by the caller. */
D2T_API void d2t_string_free(char* s);

/* ---- configuration ---- */

typedef struct d2t_config d2t_config;

D2T_API d2t_status d2t_config_default(d2t_config** out);
D2T_API d2t_status d2t_config_load(const char* path, d2t_config** out);
D2T_API d2t_status d2t_config_parse(const char* toml_text, d2t_config** out);
D2T_API d2t_status d2t_config_to_toml(const d2t_config* config, char** out);
D2T_API void d2t_config_free(d2t_config* config);

D2T_API d2t_status d2t_config_set_seed(d2t_config* config, uint64_t seed);
D2T_API d2t_status d2t_config_set_sample_count(d2t_config* config, uint64_t count);
D2T_API d2t_status d2t_config_set_flat_field(d2t_config* config, int enabled);
D2T_API d2t_status d2t_config_set_d_over_r0(d2t_config* config, double lo, double hi);
/* Negative value restores the D/r0-derived tilt magnitude. */
D2T_API d2t_status d2t_config_set_tilt_rms(d2t_config* config, double tilt_rms_px);
D2T_API d2t_status d2t_config_set_debug(d2t_config* config, int enabled);
D2T_API d2t_status d2t_config_get_seed(const d2t_config* config, uint64_t* seed);

/* ---- flow fields (H x W x 2 float32, channel 0 = +x, 1 = +y) ---- */

typedef struct d2t_flow d2t_flow;

/* data may be NULL for a zero field; otherwise H*W*2 interleaved floats. */
D2T_API d2t_status d2t_flow_create(uint32_t height, uint32_t width, const float* data, d2t_flow** out);
D2T_API d2t_status d2t_flow_read(const char* path, d2t_flow** out);
D2T_API d2t_status d2t_flow_write(const d2t_flow* flow, const char* path);
D2T_API d2t_status d2t_flow_dims(const d2t_flow* flow, uint32_t* height, uint32_t* width);
/* Borrowed pointer valid until d2t_flow_free. */
D2T_API const float* d2t_flow_data(const d2t_flow* flow);
/* Backward flow of a forward displacement; hole_count may be NULL. */
D2T_API d2t_status d2t_flow_invert(const d2t_flow* forward, unsigned workers, d2t_flow** backward, size_t* hole_count);
D2T_API void d2t_flow_free(d2t_flow* flow);

/* ---- operations ---- */

typedef struct d2t_generate_options {
  const char* clean_dir;
  const char* depth_dir;
  const char* out_dir;
  unsigned workers;
  int strict; /* nonzero: a clean image without depth is fatal */
} d2t_generate_options;

typedef struct d2t_generate_result {
  uint64_t written;
  uint64_t skipped;
  uint64_t weak;
  uint64_t medium;
  uint64_t strong;
} d2t_generate_result;

/* D2T_E_PARTIAL when some inputs were skipped; the dataset is still valid. */
D2T_API d2t_status d2t_generate(const d2t_config* config, const d2t_generate_options* options,
                                d2t_generate_result* result);

/* Writes the tuple for one image into out_dir; with flat_field_baseline the
   uniform-strength tuple of the same seed goes to out_dir/flat_field. */
D2T_API d2t_status d2t_degrade(const d2t_config* config, const char* image_path, const char* depth_path,
                               const char* out_dir, int flat_field_baseline, double* d_over_r0);

D2T_API d2t_status d2t_inspect(const char* path, char** report);
/* D2T_E_INTEGRITY when any check fails; report lists every issue. */
D2T_API d2t_status d2t_validate(const char* dataset_dir, char** report);
D2T_API d2t_status d2t_dataset_tree_hash(const char* dataset_dir, char** hex);
/* D2T_E_INTERNAL when a statistical check fails. */
D2T_API d2t_status d2t_selftest(char** report);

#ifdef __cplusplus
}
#endif

#endif /* D2TURB_D2TURB_H */
