#ifndef RIESZ_LAB_H
#define RIESZ_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_ARGUMENT = 2,
  RL_STATUS_INVALID_PARAMS = 3,
  RL_STATUS_OVERFLOW = 4,
  RL_STATUS_GRID = 5,
  RL_STATUS_BUFFER_TOO_SMALL = 6,
  RL_STATUS_IO = 7,
  RL_STATUS_INTERNAL = 8,
  RL_STATUS_PANIC = 9,
} RlStatus;

// Validated construction parameters with their height sequence.
typedef struct RlParams RlParams;

// Result of [`rl_run`].
typedef struct RlReport RlReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call into this library from the same thread.
const char *rl_last_error(void);

// Builds parameters from `stages` entries of `m` and `t`. `nonnegative`
// selects spacers in `0..=t` instead of `-t..=t`.
//
// # Safety
// `m` and `t` must point to `stages` readable elements; `out` must be writable.
enum RlStatus rl_params_new(const size_t *m,
                            const uint64_t *t,
                            size_t stages,
                            uint64_t h1,
                            bool nonnegative,
                            struct RlParams **out);

// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum RlStatus rl_params_from_preset(const char *name, struct RlParams **out);

// Parses a JSON object with keys `m`, `t`, `h1`, `stages` and optionally
// `spacer_support` (`"symmetric"` or `"non_negative"`).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum RlStatus rl_params_from_json(const char *json, struct RlParams **out);

// # Safety
// `params` must come from an `rl_params_*` constructor or be null.
void rl_params_free(struct RlParams *params);

// Number of stages, or 0 for a null handle.
//
// # Safety
// `params` must be a live handle or null.
size_t rl_params_stages(const struct RlParams *params);

// Writes `h_1, ..., h_{J+1}` (`J + 1` values) into `out`.
//
// # Safety
// `params` must be a live handle; `out` must hold `cap` elements.
enum RlStatus rl_params_heights(const struct RlParams *params, uint64_t *out, size_t cap);

// Sets `*dissociated` when stages `1..=n` are provably collision-free.
//
// # Safety
// `params` must be a live handle; `dissociated` must be writable.
enum RlStatus rl_check_dissociation(const struct RlParams *params, size_t n, bool *dissociated);

// Writes the `m_j` exponents of stage `stage` for the omega drawn from
// `seed`. `*written` receives the count, also on `BufferTooSmall`.
//
// # Safety
// `params` must be a live handle; `out` must hold `cap` elements and
// `written` must be writable.
enum RlStatus rl_stage_exponents(const struct RlParams *params,
                                 uint64_t seed,
                                 size_t stage,
                                 uint64_t *out,
                                 size_t cap,
                                 size_t *written);

// Evaluates stage `stage` (omega drawn from `seed`) at the `grid` roots of
// unity, writing real and imaginary parts.
//
// # Safety
// `params` must be a live handle; `re` and `im` must each hold `grid` elements.
enum RlStatus rl_stage_polynomial(const struct RlParams *params,
                                  uint64_t seed,
                                  size_t stage,
                                  uint64_t grid,
                                  double *re,
                                  double *im);

// Runs an experiment described by a JSON run configuration (the same keys
// as the command-line config file). No files are written.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` must be writable.
enum RlStatus rl_run(const char *config_json, struct RlReport **out);

// # Safety
// `report` must come from [`rl_run`] or be null.
void rl_report_free(struct RlReport *report);

// Sets `*passed` when every gate of the report passed.
//
// # Safety
// `report` must be a live handle; `passed` must be writable.
enum RlStatus rl_report_passed(const struct RlReport *report, bool *passed);

// Looks up a scalar result by label.
//
// # Safety
// `report` must be a live handle, `label` NUL-terminated, `value` and
// `stderr` writable (`stderr` may be null).
enum RlStatus rl_report_result(const struct RlReport *report,
                               const char *label,
                               double *value,
                               double *stderr);

// Serializes the report to JSON. Release the string with [`rl_string_free`].
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum RlStatus rl_report_to_json(const struct RlReport *report, char **out);

// # Safety
// `s` must come from this library or be null.
void rl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIESZ_LAB_H */
