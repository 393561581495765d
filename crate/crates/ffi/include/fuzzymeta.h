#ifndef FUZZYMETA_H
#define FUZZYMETA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of (emotion, intensity) classes.
 */
#define FZM_NUM_CLASSES 18

/**
 * Result code of every fallible call.
 */
typedef enum FzmStatus {
  FZM_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  FZM_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or had the wrong length.
   */
  FZM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Rule or curve text did not parse.
   */
  FZM_STATUS_PARSE = 3,
  /**
   * Any other library error.
   */
  FZM_STATUS_INTERNAL = 4,
  /**
   * The library panicked; the call had no effect.
   */
  FZM_STATUS_PANIC = 5,
} FzmStatus;

/**
 * Intensity curves over eccentricity.
 */
typedef struct FzmCurves FzmCurves;

/**
 * A parsed rule bank.
 */
typedef struct FzmRuleBank FzmRuleBank;

/**
 * Label assigned to one coding.
 */
typedef struct FzmAnnotation {
  /**
   * Class index, `emotion * 3 + intensity`.
   */
  uint32_t class_index;
  /**
   * 0 Angry, 1 Happy, 2 Disgust, 3 Fear, 4 Sad, 5 Surprise.
   */
  uint32_t emotion;
  /**
   * 0 Low, 1 Medium, 2 High.
   */
  uint32_t intensity;
  double confidence;
  double eccentricity;
  double curve_degree;
} FzmAnnotation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fzm_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `cap > 0`). Returns the full message length
 * without the terminator, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t fzm_last_error(char *buf, size_t cap);

/**
 * `"Emotion-Intensity"` name of a class index, or null when out of range.
 */
const char *fzm_class_name(uint32_t class_index);

/**
 * The shipped 18-rule bank.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum FzmStatus fzm_rule_bank_default(struct FzmRuleBank **out);

/**
 * Parses a rule bank with 12 components: one rule per line,
 * `<Emotion> <Intensity> v1 .. v12 [w=<weight>]`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` as for
 * [`fzm_rule_bank_default`].
 */
enum FzmStatus fzm_rule_bank_parse(const char *text, struct FzmRuleBank **out);

/**
 * Number of rules, or 0 for a null handle.
 *
 * # Safety
 * `bank` must be null or a live handle.
 */
size_t fzm_rule_bank_len(const struct FzmRuleBank *bank);

/**
 * Components per rule, or 0 for a null handle.
 *
 * # Safety
 * `bank` must be null or a live handle.
 */
size_t fzm_rule_bank_components(const struct FzmRuleBank *bank);

/**
 * Releases a bank; null is ignored.
 *
 * # Safety
 * `bank` must be null or a handle not yet freed.
 */
void fzm_rule_bank_free(struct FzmRuleBank *bank);

/**
 * The shipped intensity curves.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum FzmStatus fzm_curves_default(struct FzmCurves **out);

/**
 * Parses curves: `<Emotion> <Intensity> <center> <half_width>` per line.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` as for
 * [`fzm_curves_default`].
 */
enum FzmStatus fzm_curves_parse(const char *text, struct FzmCurves **out);

/**
 * Releases curves; null is ignored.
 *
 * # Safety
 * `curves` must be null or a handle not yet freed.
 */
void fzm_curves_free(struct FzmCurves *curves);

/**
 * Degree of the class's intensity curve at eccentricity `e` in [0, 1].
 *
 * # Safety
 * `curves` must be a live handle and `out` writable.
 */
enum FzmStatus fzm_curves_eval(const struct FzmCurves *curves,
                               uint32_t class_index,
                               double e,
                               double *out);

/**
 * De-fuzzifies 12 raw component scores into a soft coding written to
 * `out` (12 values).
 *
 * # Safety
 * `scores` must point to `len` readable values and `out` to `len`
 * writable values.
 */
enum FzmStatus fzm_fcis_defuzzify(const double *scores,
                                  size_t len,
                                  double lambda1,
                                  double lambda2,
                                  double *out);

/**
 * Class memberships of a coding, written to `out` (18 values, class
 * index order). `fallback`, when non-null, receives 1 if no rule fired
 * and the uniform vector was returned.
 *
 * # Safety
 * `bank` must be a live handle, `coding` must point to `len` values and
 * `out` to 18 writable values.
 */
enum FzmStatus fzm_class_memberships(const struct FzmRuleBank *bank,
                                     const double *coding,
                                     size_t len,
                                     double lambda1,
                                     double lambda2,
                                     double *out,
                                     uint8_t *fallback);

/**
 * Labels a coding with its (emotion, intensity) class and confidence.
 *
 * # Safety
 * `bank` and `curves` must be live handles, `coding` must point to `len`
 * values and `out` must be writable.
 */
enum FzmStatus fzm_annotate(const struct FzmRuleBank *bank,
                            const struct FzmCurves *curves,
                            const double *coding,
                            size_t len,
                            double lambda1,
                            double lambda2,
                            struct FzmAnnotation *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FUZZYMETA_H */
