#ifndef CDLOSS_H
#define CDLOSS_H

/*
 * C interface to the contour-loss library.
 *
 * Every function returns a cdl_status. On failure, cdl_last_error() holds a
 * message for the calling thread until its next call into the library.
 * Strings handed out by the library are released with cdl_string_free,
 * volumes with cdl_volume_free. Configuration is passed as JSON text; NULL
 * or "" means defaults.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(CDL_BUILDING_LIBRARY)
#define CDL_API __attribute__((visibility("default")))
#else
#define CDL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdl_status {
  CDL_OK = 0,
  CDL_INVALID_ARGUMENT = 1,
  CDL_SHAPE_MISMATCH = 2,
  CDL_OUT_OF_RANGE = 3,
  CDL_EMPTY_MASK = 4,
  CDL_DEGENERATE_MASK = 5,
  CDL_NO_COMMON_SLICES = 6,
  CDL_GRID_TOO_SMALL = 7,
  CDL_MALFORMED_HEADER = 8,
  CDL_SIZE_MISMATCH = 9,
  CDL_UNSUPPORTED_DTYPE = 10,
  CDL_UNSUPPORTED_FORMAT = 11,
  CDL_IO_ERROR = 12,
  CDL_CONFIG_ERROR = 13,
  CDL_DIVERGENCE = 14,
  CDL_INTERNAL = 15
} cdl_status;

typedef enum cdl_volume_kind { CDL_GRID = 0, CDL_MASK = 1 } cdl_volume_kind;

typedef enum cdl_format { CDL_FORMAT_JSON = 0, CDL_FORMAT_CSV = 1, CDL_FORMAT_MARKDOWN = 2, CDL_FORMAT_SVG = 3 } cdl_format;

typedef struct cdl_volume cdl_volume;

CDL_API const char* cdl_version(void);
CDL_API const char* cdl_last_error(void);
CDL_API const char* cdl_status_name(cdl_status status);
CDL_API void cdl_string_free(char* s);

/* Volumes */
CDL_API cdl_status cdl_volume_load(const char* path, cdl_volume** out);
CDL_API cdl_status cdl_volume_save(const cdl_volume* v, const char* path);
/* spacing points to three doubles (mm); values holds nx*ny*nz entries, x fastest. */
CDL_API cdl_status cdl_volume_create_grid(size_t nx, size_t ny, size_t nz, const double* spacing,
                                          const double* values, cdl_volume** out);
CDL_API cdl_status cdl_volume_create_mask(size_t nx, size_t ny, size_t nz, const double* spacing,
                                          const uint8_t* bits, cdl_volume** out);
CDL_API void cdl_volume_free(cdl_volume* v);
CDL_API cdl_status cdl_volume_kind_of(const cdl_volume* v, cdl_volume_kind* kind);
/* dims and spacing each receive three entries; either may be NULL. */
CDL_API cdl_status cdl_volume_dims(const cdl_volume* v, size_t* dims, double* spacing);
/* Copies min(n, size) values; masks copy as 0.0 / 1.0. */
CDL_API cdl_status cdl_volume_copy_values(const cdl_volume* v, double* out, size_t n);
/* Value >= effective threshold; a mask passes through unchanged. */
CDL_API cdl_status cdl_volume_binarize(const cdl_volume* v, double t, cdl_volume** out);
CDL_API cdl_status cdl_volume_count_true(const cdl_volume* v, size_t* count);

/* Morphology. iterations >= 1; a grid input is binarized at 0.5 first. */
CDL_API cdl_status cdl_extract_contour(const cdl_volume* m, unsigned iterations, cdl_volume** out);
CDL_API cdl_status cdl_extract_band(const cdl_volume* m, unsigned dilate, unsigned erode, cdl_volume** out);

/* Phantom from a JSON spec; the truth is a mask, the corrupted volume a grid. */
CDL_API cdl_status cdl_synth(const char* spec_json, cdl_volume** truth, cdl_volume** corrupted);

/* Metrics of pred (mask, or grid binarized at threshold) against truth.
   opts_json: {"contour": {...}, "band": ..., "percentile": P}. format: JSON or CSV. */
CDL_API cdl_status cdl_evaluate(const cdl_volume* pred, const cdl_volume* truth, double threshold,
                                const char* opts_json, cdl_format format, char** out);

/* A single loss by name. grad may be NULL. */
CDL_API cdl_status cdl_loss(const char* name, const cdl_volume* p, const cdl_volume* g, const char* config_json,
                            double* value, cdl_volume** grad);
/* Writes max relative error, checked count and nonzero-gradient count. */
CDL_API cdl_status cdl_grad_check(const char* name, const cdl_volume* p, const cdl_volume* g,
                                  const char* config_json, size_t samples, double h, uint64_t seed,
                                  double* max_rel_error, size_t* checked, size_t* nonzero);

/* Run record as JSON; include_timing adds wall time and a UTC timestamp. */
CDL_API cdl_status cdl_fit(const char* phantom_json, const char* loss_json, const char* optimizer_json,
                           int include_timing, char** out);
/* Ablation table as CSV; grid_json NULL or "" runs the default grid. */
CDL_API cdl_status cdl_ablate(const char* grid_json, char** out);
CDL_API cdl_status cdl_default_ablation_grid(char** out);
/* Summary of an ablation CSV as markdown or SVG. */
CDL_API cdl_status cdl_report(const char* csv, cdl_format format, char** out);

#ifdef __cplusplus
}
#endif

#endif
