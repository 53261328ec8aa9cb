#ifndef DHASH_H
#define DHASH_H

#pragma once

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum DhStatus {
  DH_STATUS_OK = 0,
  DH_STATUS_INVALID_ARGUMENT = 1,
  DH_STATUS_INVALID_CONFIG = 2,
  DH_STATUS_EMPTY_DISTILLED_SET = 3,
  DH_STATUS_IO = 4,
  DH_STATUS_NULL_POINTER = 5,
  DH_STATUS_PANIC = 6,
} DhStatus;

/**
 * How feature rows are rescaled before the encoder sees them.
 */
typedef enum DhInputScaling {
  DH_INPUT_SCALING_NONE = 0,
  DH_INPUT_SCALING_SQRT_DIM = 1,
} DhInputScaling;

/**
 * Bit-packed binary codes.
 */
typedef struct DhCodes DhCodes;

/**
 * A trained encoder.
 */
typedef struct DhEncoder DhEncoder;

/**
 * Feature matrix, optionally labeled.
 */
typedef struct DhFeatures DhFeatures;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *dh_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library, freed once.
 */
void dh_string_free(char *s);

/**
 * Reads a feature file and, when `labels_path` is non-null, its labels.
 *
 * # Safety
 * Paths must be NUL-terminated; `out` must be writable.
 */
enum DhStatus dh_features_load(const char *features_path,
                               const char *labels_path,
                               struct DhFeatures **out);

/**
 * Labeled Gaussian clusters around orthonormal centers.
 *
 * # Safety
 * `out` must be writable.
 */
enum DhStatus dh_synth_generate(size_t n_clusters,
                                size_t points_per_cluster,
                                size_t dim,
                                double noise_sigma,
                                uint64_t seed,
                                struct DhFeatures **out);

/**
 * # Safety
 * `f` must be a live handle or null (returns 0).
 */
size_t dh_features_n_items(const struct DhFeatures *f);

/**
 * # Safety
 * `f` must be a live handle or null (returns 0).
 */
size_t dh_features_dim(const struct DhFeatures *f);

/**
 * # Safety
 * `f` must be null or a handle from this library, freed once.
 */
void dh_features_free(struct DhFeatures *f);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum DhStatus dh_codes_load(const char *path, struct DhCodes **out);

/**
 * # Safety
 * `codes` must be a live handle; `path` NUL-terminated.
 */
enum DhStatus dh_codes_save(const struct DhCodes *codes, const char *path);

/**
 * # Safety
 * `c` must be a live handle or null (returns 0).
 */
size_t dh_codes_n_items(const struct DhCodes *c);

/**
 * # Safety
 * `c` must be a live handle or null (returns 0).
 */
size_t dh_codes_code_len(const struct DhCodes *c);

/**
 * # Safety
 * `c` must be null or a handle from this library, freed once.
 */
void dh_codes_free(struct DhCodes *c);

/**
 * Hamming distance between row `i` of `a` and row `j` of `b`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum DhStatus dh_hamming_distance(const struct DhCodes *a,
                                  size_t i,
                                  const struct DhCodes *b,
                                  size_t j,
                                  uint32_t *out);

/**
 * Random-hyperplane codes; the same `seed` gives the same hyperplanes.
 *
 * # Safety
 * `features` must be live; `out` writable.
 */
enum DhStatus dh_lsh_baseline(const struct DhFeatures *features,
                              size_t code_len,
                              uint64_t seed,
                              struct DhCodes **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` writable.
 */
enum DhStatus dh_encoder_load(const char *path, struct DhEncoder **out);

/**
 * # Safety
 * `e` must be null or a handle from this library, freed once.
 */
void dh_encoder_free(struct DhEncoder *e);

/**
 * Forward pass and sign on every row. Pipelines use `SqrtDim` by default.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum DhStatus dh_encoder_encode(const struct DhEncoder *encoder,
                                const struct DhFeatures *features,
                                enum DhInputScaling scaling,
                                struct DhCodes **out);

/**
 * Evaluates `query_codes` against `db_codes`; relevance comes from the
 * labels of the two feature handles. `top_n = 0` means
 * `min(1000, database size)`. Writes the report as JSON.
 *
 * # Safety
 * Handles must be live; `out_json` writable.
 */
enum DhStatus dh_evaluate_json(const struct DhCodes *query_codes,
                               const struct DhFeatures *query_features,
                               const struct DhCodes *db_codes,
                               const struct DhFeatures *db_features,
                               size_t top_n,
                               char **out_json);

/**
 * Runs the full pipeline (or, with `star` nonzero, the variant without
 * distillation) from flat `key = value` config text. Writes the stage log
 * and report as JSON.
 *
 * # Safety
 * `config_text` must be NUL-terminated; `out_json` writable.
 */
enum DhStatus dh_pipeline_run(const char *config_text, int32_t star, char **out_json);

/**
 * Grid check of the selection rule; writes the number of counterexamples.
 *
 * # Safety
 * `counterexamples` must be writable.
 */
enum DhStatus dh_theorem1_oracle(double grid_step, size_t *counterexamples);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DHASH_H */
