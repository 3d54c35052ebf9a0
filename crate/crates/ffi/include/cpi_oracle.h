#ifndef CPI_ORACLE_H
#define CPI_ORACLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpiStatus {
  CPI_STATUS_OK = 0,
  CPI_STATUS_NULL_POINTER = 1,
  CPI_STATUS_INVALID_ARGUMENT = 2,
  CPI_STATUS_PARSE_ERROR = 3,
  CPI_STATUS_BUDGET_EXCEEDED = 4,
  CPI_STATUS_BANDWIDTH_EXCEEDED = 5,
  CPI_STATUS_NOT_SEPARABLE = 6,
  CPI_STATUS_OVERFLOW = 7,
  CPI_STATUS_BUFFER_TOO_SMALL = 8,
  CPI_STATUS_INTERNAL = 9,
} CpiStatus;

/**
 * Opaque simulator configuration (nonidealities and filter settings).
 */
typedef struct CpiConfig CpiConfig;

/**
 * Opaque PARTITION instance.
 */
typedef struct CpiInstance CpiInstance;

typedef struct CpiDecision {
  bool yes;
  double dc_volts;
  double cut_volts;
  bool bandwidth_warning;
} CpiDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *cpi_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cpi_version(void);

/**
 * Parses whitespace- or comma-separated integers into a new instance.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CpiStatus cpi_instance_parse(const char *text, struct CpiInstance **out);

/**
 * Builds an instance from `len` positive values.
 *
 * # Safety
 * `values` must point to `len` readable `uint64_t` and `out` must be writable.
 */
enum CpiStatus cpi_instance_from_values(const uint64_t *values,
                                        size_t len,
                                        struct CpiInstance **out);

/**
 * # Safety
 * `inst` must be NULL or a handle from this library that was not freed yet.
 */
void cpi_instance_free(struct CpiInstance *inst);

/**
 * Number of values, 0 for NULL.
 *
 * # Safety
 * `inst` must be NULL or a live handle.
 */
size_t cpi_instance_len(const struct CpiInstance *inst);

/**
 * Copies the values into `buf`. Fails with `BUFFER_TOO_SMALL` when `cap`
 * is less than the instance length.
 *
 * # Safety
 * `inst` must be live and `buf` must have room for `cap` values.
 */
enum CpiStatus cpi_instance_values(const struct CpiInstance *inst, uint64_t *buf, size_t cap);

/**
 * Exact PARTITION decision by dynamic programming.
 *
 * # Safety
 * `inst` must be live and `yes` writable.
 */
enum CpiStatus cpi_decide_dp(const struct CpiInstance *inst, bool *yes);

/**
 * Fraction of balanced sign vectors: the DC of the ideal product.
 *
 * # Safety
 * `inst` must be live and `dc` writable.
 */
enum CpiStatus cpi_ideal_dc(const struct CpiInstance *inst, double *dc);

/**
 * Finds one side of a balanced split. On success `*found` tells whether one
 * exists and `*count` indices (0-based, ascending) are written to `indices`.
 *
 * # Safety
 * `inst` must be live, `indices` must have room for `cap` entries and
 * `count`/`found` must be writable.
 */
enum CpiStatus cpi_find_partition(const struct CpiInstance *inst,
                                  size_t *indices,
                                  size_t cap,
                                  size_t *count,
                                  bool *found);

/**
 * Default (nonideal) configuration with a brick-wall filter.
 */
struct CpiConfig *cpi_config_default(void);

/**
 * Noise- and offset-free configuration without a bandwidth limit.
 */
struct CpiConfig *cpi_config_ideal(void);

/**
 * Parses a flat `key = value` config text.
 *
 * # Safety
 * `text` must be NUL-terminated and `out` writable.
 */
enum CpiStatus cpi_config_parse(const char *text, struct CpiConfig **out);

/**
 * Sets one nonideality field, e.g. `("mult_output_offset", "0.004,0.004")`.
 *
 * # Safety
 * `cfg` must be live; `key` and `value` NUL-terminated.
 */
enum CpiStatus cpi_config_set(struct CpiConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must be NULL or a live handle.
 */
void cpi_config_free(struct CpiConfig *cfg);

/**
 * Simulates the analogue oracle on `inst`. A NaN `cut_volts` uses half of
 * the smallest YES-level reachable through `cfg`.
 *
 * # Safety
 * `inst` and `cfg` must be live and `out` writable.
 */
enum CpiStatus cpi_decide_analog(const struct CpiInstance *inst,
                                 const struct CpiConfig *cfg,
                                 double cut_volts,
                                 struct CpiDecision *out);

/**
 * Solves a DIMACS CNF formula with the exact PARTITION oracle. On success
 * `*satisfiable` is set and, when true, `*num_vars` signed literals
 * (`+v` true, `-v` false) are written to `model`.
 *
 * # Safety
 * `dimacs` must be NUL-terminated, `model` must have room for `cap`
 * entries and `num_vars`/`satisfiable` must be writable.
 */
enum CpiStatus cpi_sat_solve(const char *dimacs,
                             int32_t *model,
                             size_t cap,
                             size_t *num_vars,
                             bool *satisfiable);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPI_ORACLE_H */
