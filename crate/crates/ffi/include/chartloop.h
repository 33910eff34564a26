#ifndef CHARTLOOP_H
#define CHARTLOOP_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChartloopStatus {
  CHARTLOOP_STATUS_OK = 0,
  CHARTLOOP_STATUS_NULL_POINTER = 1,
  CHARTLOOP_STATUS_INVALID_UTF8 = 2,
  CHARTLOOP_STATUS_INVALID_INPUT = 3,
  CHARTLOOP_STATUS_NO_ANSWER = 4,
  CHARTLOOP_STATUS_INTERNAL = 5,
} ChartloopStatus;

typedef enum ChartloopStepKind {
  CHARTLOOP_STEP_KIND_QUERY = 0,
  CHARTLOOP_STEP_KIND_CONCLUSION = 1,
  CHARTLOOP_STEP_KIND_OTHER = 2,
} ChartloopStepKind;

/**
 * Opaque chart table handle.
 */
typedef struct ChartloopTable ChartloopTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses one chart in the internal JSON schema into `*out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum ChartloopStatus chartloop_table_from_json(const char *json, struct ChartloopTable **out);

/**
 * # Safety
 * `table` must come from `chartloop_table_from_json` and not be used again.
 */
void chartloop_table_free(struct ChartloopTable *table);

/**
 * Number of cells (series × x-labels).
 *
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
enum ChartloopStatus chartloop_table_length(const struct ChartloopTable *table, size_t *out);

/**
 * Answers one protocol query line the way the table oracle reader does.
 *
 * # Safety
 * `table` must be a live handle, `query` NUL-terminated, `out` writable.
 */
enum ChartloopStatus chartloop_oracle_read(const struct ChartloopTable *table,
                                           const char *query,
                                           char **out);

/**
 * Classifies a reasoner line. `out_text` receives the canonical query
 * line, the conclusion's answer, or the line itself.
 *
 * # Safety
 * `line` NUL-terminated; `out_kind` and `out_text` writable.
 */
enum ChartloopStatus chartloop_parse_step(const char *line,
                                          enum ChartloopStepKind *out_kind,
                                          char **out_text);

/**
 * Canonical rendering of a raw answer string.
 *
 * # Safety
 * `raw` NUL-terminated; `out` writable.
 */
enum ChartloopStatus chartloop_normalize_answer(const char *raw, char **out);

/**
 * Relaxed-accuracy verdict for two raw answers; `*out` is 1 or 0.
 *
 * # Safety
 * Both strings NUL-terminated; `out` writable.
 */
enum ChartloopStatus chartloop_relaxed_match(const char *prediction,
                                             const char *gold,
                                             int32_t *out);

/**
 * Majority vote over `n` raw answers. Empty and "unknown" answers are
 * ignored; if nothing remains the status is `NoAnswer`.
 *
 * # Safety
 * `answers` must point to `n` NUL-terminated strings; `out` writable.
 */
enum ChartloopStatus chartloop_majority_vote(const char *const *answers, size_t n, char **out);

/**
 * Generates `n_charts` random charts under `seed`, asks every template
 * question with the symbolic reasoner against the table oracle, and
 * reports how many were answered correctly.
 *
 * # Safety
 * `out_correct` and `out_total` writable.
 */
enum ChartloopStatus chartloop_run_closed_loop(size_t n_charts,
                                               uint64_t seed,
                                               bool no_describe,
                                               size_t *out_correct,
                                               size_t *out_total);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into this library on the same thread.
 */
const char *chartloop_last_error_message(void);

/**
 * # Safety
 * `s` must be a string returned by this library, or null.
 */
void chartloop_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHARTLOOP_H */
