#ifndef XMLBENCH_H
#define XMLBENCH_H

/* Generated by cbindgen from src/lib.rs. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum XbStatus {
  XB_STATUS_OK = 0,
  XB_STATUS_NULL_POINTER = 1,
  XB_STATUS_INVALID_ARGUMENT = 2,
  XB_STATUS_PARSE = 3,
  XB_STATUS_CODEC = 4,
  XB_STATUS_STATS = 5,
  XB_STATUS_METRIC = 6,
  XB_STATUS_PANIC = 7,
} XbStatus;

/**
 * Compression mode selector, passed as `int32_t`.
 */
typedef enum XbMode {
  XB_MODE_DEFAULT = 0,
  XB_MODE_MAXIMUM = 1,
} XbMode;

/**
 * Owned byte buffer.
 */
typedef struct XbBuffer XbBuffer;

/**
 * Parsed XML document.
 */
typedef struct XbDocument XbDocument;

/**
 * Codec registry.
 */
typedef struct XbRegistry XbRegistry;

/**
 * File properties of one document.
 */
typedef struct XbProfile {
  uint64_t bytes;
  uint64_t lines;
  uint32_t unique_chars;
  uint32_t unique_tags;
  uint32_t depth;
  double h1;
} XbProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *xb_last_error(void);

void xb_clear_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *xb_version(void);

/**
 * # Safety
 * `buf` must be NULL or a handle from this library.
 */
const uint8_t *xb_buffer_data(const struct XbBuffer *buf);

/**
 * # Safety
 * `buf` must be NULL or a handle from this library.
 */
size_t xb_buffer_len(const struct XbBuffer *buf);

/**
 * # Safety
 * `buf` must be NULL or a handle from this library not yet freed.
 */
void xb_buffer_free(struct XbBuffer *buf);

/**
 * The built-in codecs.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum XbStatus xb_registry_builtins(struct XbRegistry **out);

/**
 * Loads a registry from a JSON path, a comma list of built-in names or
 * `all`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum XbStatus xb_registry_load(const char *spec, struct XbRegistry **out);

/**
 * Number of codec entries.
 *
 * # Safety
 * `reg` must be NULL or a handle from this library.
 */
size_t xb_registry_len(const struct XbRegistry *reg);

/**
 * # Safety
 * `reg` must be NULL or a handle from this library not yet freed.
 */
void xb_registry_free(struct XbRegistry *reg);

/**
 * Compresses with codec `name`. On success `*out` receives a new buffer
 * and `*t_exec` (if not NULL) the execution time in day fractions.
 *
 * # Safety
 * Pointers must be valid; `data` must hold `len` bytes.
 */
enum XbStatus xb_compress(const struct XbRegistry *reg,
                          const char *name,
                          int32_t m,
                          const uint8_t *data,
                          size_t len,
                          struct XbBuffer **out,
                          double *t_exec);

/**
 * Inverse of [`xb_compress`]. XML codecs return the canonical
 * serialization of the document.
 *
 * # Safety
 * Pointers must be valid; `data` must hold `len` bytes.
 */
enum XbStatus xb_decompress(const struct XbRegistry *reg,
                            const char *name,
                            int32_t m,
                            const uint8_t *data,
                            size_t len,
                            struct XbBuffer **out);

/**
 * # Safety
 * `data` must hold `len` bytes; `out` must be valid for writes.
 */
enum XbStatus xb_document_parse(const uint8_t *data, size_t len, struct XbDocument **out);

/**
 * Maximum element nesting, root = 1; 0 for NULL.
 *
 * # Safety
 * `doc` must be NULL or a handle from this library.
 */
size_t xb_document_depth(const struct XbDocument *doc);

/**
 * Serializes the document without comments into a new buffer.
 *
 * # Safety
 * `doc` must be a handle from this library; `out` must be valid for writes.
 */
enum XbStatus xb_document_strip(const struct XbDocument *doc, struct XbBuffer **out);

/**
 * # Safety
 * `doc` must be NULL or a handle from this library not yet freed.
 */
void xb_document_free(struct XbDocument *doc);

/**
 * Profiles raw document bytes.
 *
 * # Safety
 * `data` must hold `len` bytes; `out` must be valid for writes.
 */
enum XbStatus xb_profile(const uint8_t *data, size_t len, struct XbProfile *out);

/**
 * Entropy per byte of the overlapping `n`-byte word distribution.
 *
 * # Safety
 * `data` must hold `len` bytes; `out` must be valid for writes.
 */
enum XbStatus xb_entropy(const uint8_t *data, size_t len, size_t n, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum XbStatus xb_y_comp_ratio(uint64_t s_native, uint64_t s_comp, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum XbStatus xb_y_comp_speed(uint64_t s_native, double t_exec, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum XbStatus xb_y_eff_old(uint64_t s_comp, uint64_t min_s_comp, double t_exec, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum XbStatus xb_y_eff_prop(uint64_t s_native,
                            uint64_t s_comp,
                            uint64_t min_s_comp,
                            double t_exec,
                            double *out);

/**
 * Upper tail of the F distribution.
 */
double xb_f_sf(double f, double df1, double df2);

/**
 * Studentized range critical value.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum XbStatus xb_q_critical(double alpha, size_t k, double df_error, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XMLBENCH_H */
