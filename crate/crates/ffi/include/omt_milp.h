#ifndef OMT_MILP_H
#define OMT_MILP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OmtStatus {
  OMT_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  OMT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  OMT_STATUS_INVALID_UTF8 = 2,
  /**
   * The library rejected the request; see `omt_last_error_code`.
   */
  OMT_STATUS_DOMAIN_ERROR = 3,
  /**
   * An internal panic was caught at the boundary.
   */
  OMT_STATUS_PANIC = 4,
} OmtStatus;

typedef enum OmtFormat {
  OMT_FORMAT_LP = 0,
  OMT_FORMAT_MPS = 1,
} OmtFormat;

typedef enum OmtIfThen {
  OMT_IF_THEN_STRONG = 0,
  OMT_IF_THEN_WEAK = 1,
} OmtIfThen;

/**
 * Opaque model handle.
 */
typedef struct OmtModel OmtModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a model document. On success `*out` holds a new handle to be
 * released with `omt_model_free`.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is valid for one pointer write.
 */
enum OmtStatus omt_model_from_json(const char *json, struct OmtModel **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `model` is NULL or a handle not yet freed.
 */
void omt_model_free(struct OmtModel *model);

/**
 * Writes the model as a model document.
 *
 * # Safety
 * `model` is a live handle; `out` is valid for one pointer write.
 */
enum OmtStatus omt_model_to_json(const struct OmtModel *model, char **out);

/**
 * Lowers the model and writes it as LP or MPS text.
 *
 * # Safety
 * `model` is a live handle; `out` is valid for one pointer write.
 */
enum OmtStatus omt_model_compile(const struct OmtModel *model,
                                 enum OmtFormat format,
                                 enum OmtIfThen if_then,
                                 char **out);

/**
 * Solves by enumeration and writes the optimum report as JSON
 * (`status`, `value`, `witness`, `points_enumerated`).
 *
 * # Safety
 * `model` is a live handle; `out` is valid for one pointer write.
 */
enum OmtStatus omt_model_solve(const struct OmtModel *model, uint64_t max_points, char **out);

/**
 * Checks every lowered constraint against its meaning and writes the
 * report as JSON. A report with `"holds": false` is still `Ok`.
 *
 * # Safety
 * `model` is a live handle; `out` is valid for one pointer write.
 */
enum OmtStatus omt_model_check(const struct OmtModel *model, uint64_t box_cap, char **out);

/**
 * Writes the validation diagnostics as a JSON array, empty when the model
 * is well formed.
 *
 * # Safety
 * `model` is a live handle; `out` is valid for one pointer write.
 */
enum OmtStatus omt_model_validate(const struct OmtModel *model, char **out);

/**
 * Writes the optimization modelling tree document.
 *
 * # Safety
 * `out` is valid for one pointer write.
 */
enum OmtStatus omt_tree_json(char **out);

/**
 * Builds a case study at its default scale, e.g. `"chemical-scheduling"`.
 *
 * # Safety
 * `case_id` is a NUL-terminated string; `out` is valid for one pointer write.
 */
enum OmtStatus omt_corpus_build(const char *case_id, struct OmtModel **out);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` is NULL or a string from this library not yet freed.
 */
void omt_string_free(char *s);

/**
 * Error code of the last failed call on this thread, or NULL after a
 * success. Valid until the next call into the library on this thread.
 */
const char *omt_last_error_code(void);

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * Valid until the next call into the library on this thread.
 */
const char *omt_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OMT_MILP_H */
