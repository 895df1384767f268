#ifndef MAMMOCAD_H
#define MAMMOCAD_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum McStatus {
  MC_STATUS_OK = 0,
  MC_STATUS_NULL_ARGUMENT = 1,
  MC_STATUS_INVALID_INPUT = 2,
  MC_STATUS_IO = 3,
  MC_STATUS_SCHEMA = 4,
  MC_STATUS_ROI_EXCEEDS_IMAGE = 5,
  MC_STATUS_SEED_OUT_OF_BOUNDS = 6,
  MC_STATUS_DEGENERATE_MASK = 7,
  MC_STATUS_DIMENSION_MISMATCH = 8,
  MC_STATUS_ROI_TOO_SMALL = 9,
  MC_STATUS_OUT_OF_RANGE = 10,
  MC_STATUS_INTERNAL = 98,
  MC_STATUS_PANIC = 99,
} McStatus;

typedef struct McCandidateSet McCandidateSet;

typedef struct McImage McImage;

typedef struct McModel McModel;

/**
 * Rates derived from a 4x4 confusion matrix (rows actual, B-2..B-5).
 */
typedef struct McMetrics {
  double accuracy;
  double sensitivity[4];
  double specificity[4];
  double micro_ppv;
  double micro_npv;
  double micro_mcc;
  double macro_ppv;
  double macro_npv;
} McMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mc_version(void);

/**
 * Message of the last failure on this thread; empty when none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mc_last_error(void);

/**
 * Copies `len` row-major pixels into a new image.
 *
 * # Safety
 * `pixels` must point to `len` readable values and `out` must be writable.
 */
enum McStatus mc_image_new(size_t width,
                           size_t height,
                           uint8_t bit_depth,
                           double spacing_mm,
                           const uint16_t *pixels,
                           size_t len,
                           struct McImage **out);

/**
 * Reads an 8- or 16-bit grayscale PNG.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum McStatus mc_image_load_png(const char *path, double spacing_mm, struct McImage **out);

/**
 * # Safety
 * `img` must come from this library or be null.
 */
void mc_image_free(struct McImage *img);

/**
 * # Safety
 * `img` must be a live image or null (returns 0).
 */
size_t mc_image_width(const struct McImage *img);

/**
 * # Safety
 * `img` must be a live image or null (returns 0).
 */
size_t mc_image_height(const struct McImage *img);

/**
 * Borrowed row-major pixel buffer of `width * height` values, valid while
 * the image lives.
 *
 * # Safety
 * `img` must be a live image or null (returns null).
 */
const uint16_t *mc_image_pixels(const struct McImage *img);

/**
 * Square `(2 * radius + 1)` window around `(row, col)`, slid inward at the
 * borders.
 *
 * # Safety
 * `img` must be a live image and `out` writable.
 */
enum McStatus mc_crop_roi(const struct McImage *img,
                          size_t row,
                          size_t col,
                          size_t radius,
                          struct McImage **out);

/**
 * Histogram-equalized copy.
 *
 * # Safety
 * `img` must be a live image and `out` writable.
 */
enum McStatus mc_equalize(const struct McImage *img, struct McImage **out);

/**
 * Region-growing candidates from the image center over `steps` thresholds.
 *
 * # Safety
 * `img` must be a live image and `out` writable.
 */
enum McStatus mc_threshold_sweep(const struct McImage *img,
                                 size_t steps,
                                 struct McCandidateSet **out);

/**
 * # Safety
 * `set` must come from this library or be null.
 */
void mc_candidates_free(struct McCandidateSet *set);

/**
 * # Safety
 * `set` must be a live candidate set or null (returns 0).
 */
size_t mc_candidates_len(const struct McCandidateSet *set);

/**
 * Threshold and pixel count of one candidate.
 *
 * # Safety
 * `set` must be live; `threshold` and `pixel_count` writable.
 */
enum McStatus mc_candidate_info(const struct McCandidateSet *set,
                                size_t index,
                                double *threshold,
                                size_t *pixel_count);

/**
 * Writes the candidate mask as `width * height` bytes of 0/1.
 *
 * # Safety
 * `set` must be live and `out` must hold `len` writable bytes.
 */
enum McStatus mc_candidate_mask(const struct McCandidateSet *set,
                                size_t index,
                                uint8_t *out,
                                size_t len);

/**
 * The 130 raw (unnormalized) features of `roi` segmented by one candidate,
 * with default feature settings.
 *
 * # Safety
 * `roi` and `set` must be live; `out` must hold 130 writable doubles.
 */
enum McStatus mc_extract_features(const struct McImage *roi,
                                  const struct McCandidateSet *set,
                                  size_t candidate,
                                  double patient_age,
                                  double *out);

size_t mc_feature_count(void);

/**
 * Static name of a 1-based feature id, or null when out of range.
 */
const char *mc_feature_name(uint16_t id);

/**
 * Hidden-layer width for `inputs` features; 0 when `inputs` is 0.
 */
size_t mc_hidden_size(size_t inputs);

/**
 * Loads a model saved by the pipeline.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum McStatus mc_model_load(const char *path, struct McModel **out);

/**
 * # Safety
 * `model` must come from this library or be null.
 */
void mc_model_free(struct McModel *model);

/**
 * Number of inputs the model expects; 0 for null.
 *
 * # Safety
 * `model` must be live or null.
 */
size_t mc_model_inputs(const struct McModel *model);

/**
 * Classifies one input vector. `class_index` receives 0..3 for B-2..B-5
 * and `scores` the four class probabilities.
 *
 * # Safety
 * `x` must hold `len` doubles, `class_index` be writable and `scores` hold
 * 4 writable doubles.
 */
enum McStatus mc_model_predict(const struct McModel *model,
                               const double *x,
                               size_t len,
                               uint32_t *class_index,
                               double *scores);

/**
 * Metrics of a row-major 4x4 confusion matrix (rows actual class).
 *
 * # Safety
 * `counts` must hold 16 values and `out` be writable.
 */
enum McStatus mc_metrics_from_confusion(const uint64_t *counts, struct McMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAMMOCAD_H */
