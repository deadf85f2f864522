/* SPDX-License-Identifier: MIT OR Apache-2.0 */

#ifndef CVKIT_H
#define CVKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CvkStatus {
  CVK_STATUS_OK = 0,
  CVK_STATUS_NULL_POINTER = 1,
  CVK_STATUS_INVALID_ARGUMENT = 2,
  CVK_STATUS_IO = 3,
  CVK_STATUS_FORMAT = 4,
  CVK_STATUS_DIMENSION_MISMATCH = 5,
  CVK_STATUS_NOT_FOUND = 6,
  CVK_STATUS_BUFFER_TOO_SMALL = 7,
  CVK_STATUS_PANIC = 8,
} CvkStatus;

// Opaque activation set loaded from a `.cva` container.
typedef struct CvkActivationSet CvkActivationSet;

// Opaque concept-vector store loaded from a `.cvv` file.
typedef struct CvkConceptStore CvkConceptStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *cvk_last_error(void);

// Library version, static and NUL-terminated.
const char *cvk_version(void);

// Checks a `.cva` file. Returns `Ok` when valid; otherwise `Format` (or
// `Io`) with every issue in the last-error message.
//
// # Safety
// `path` must be a NUL-terminated string.
enum CvkStatus cvk_validate_container(const char *path);

// Loads a `.cva` container.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum CvkStatus cvk_activation_set_open(const char *path, struct CvkActivationSet **out);

// Writes the set back to a `.cva` container.
//
// # Safety
// `set` must come from [`cvk_activation_set_open`]; `path` must be a
// NUL-terminated string.
enum CvkStatus cvk_activation_set_save(const struct CvkActivationSet *set, const char *path);

// Releases a set. Null is ignored.
//
// # Safety
// `set` must come from [`cvk_activation_set_open`] and not be used again.
void cvk_activation_set_free(struct CvkActivationSet *set);

// Number of sequences, or 0 for null.
//
// # Safety
// `set` must be null or come from [`cvk_activation_set_open`].
size_t cvk_activation_set_len(const struct CvkActivationSet *set);

// Token dimension `d`, or 0 for null.
//
// # Safety
// `set` must be null or come from [`cvk_activation_set_open`].
size_t cvk_activation_set_dim(const struct CvkActivationSet *set);

// Token count of sequence `index`.
//
// # Safety
// `set` must come from [`cvk_activation_set_open`]; `out_len` must be valid.
enum CvkStatus cvk_activation_set_sequence_len(const struct CvkActivationSet *set,
                                               size_t index,
                                               size_t *out_len);

// Copies the `len × d` tokens of sequence `index` into `out`.
//
// # Safety
// `set` must come from [`cvk_activation_set_open`]; `out` must hold
// `capacity` floats.
enum CvkStatus cvk_activation_set_copy_tokens(const struct CvkActivationSet *set,
                                              size_t index,
                                              float *out,
                                              size_t capacity);

// Loads a `.cvv` vector store.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum CvkStatus cvk_concept_store_open(const char *path, struct CvkConceptStore **out);

// Releases a store. Null is ignored.
//
// # Safety
// `store` must come from [`cvk_concept_store_open`] and not be used again.
void cvk_concept_store_free(struct CvkConceptStore *store);

// Number of vectors, or 0 for null.
//
// # Safety
// `store` must be null or come from [`cvk_concept_store_open`].
size_t cvk_concept_store_len(const struct CvkConceptStore *store);

// Vector dimension, or 0 for null.
//
// # Safety
// `store` must be null or come from [`cvk_concept_store_open`].
size_t cvk_concept_store_dim(const struct CvkConceptStore *store);

// Copies the unit vector labelled `label` (e.g. `"red|circle"`) into `out`.
//
// # Safety
// `store` must come from [`cvk_concept_store_open`]; `label` must be a
// NUL-terminated string; `out` must hold `capacity` floats.
enum CvkStatus cvk_concept_store_copy_vector(const struct CvkConceptStore *store,
                                             const char *label,
                                             float *out,
                                             size_t capacity);

// Steers `n_tokens` rows of `d` floats in place:
// `h ← h + (h·â)(b̂ − â)`. `source` and `target` are normalized first.
//
// # Safety
// `tokens` must hold `n_tokens · d` floats; `source` and `target` `d` each.
enum CvkStatus cvk_steer_tokens(float *tokens,
                                size_t n_tokens,
                                size_t d,
                                const float *source,
                                const float *target);

// Cosine similarity of two length-`d` vectors.
//
// # Safety
// `a` and `b` must hold `d` floats; `out` must be valid.
enum CvkStatus cvk_cosine(const float *a, const float *b, size_t d, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVKIT_H */
