#ifndef MLA_KIT_H
#define MLA_KIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum MlaStatus {
  MLA_STATUS_OK = 0,
  MLA_STATUS_NULL_POINTER = 1,
  MLA_STATUS_INVALID_ARGUMENT = 2,
  MLA_STATUS_LENGTH_MISMATCH = 3,
  MLA_STATUS_PARSE = 4,
  MLA_STATUS_NOT_PSD = 5,
  MLA_STATUS_INTERNAL = 6,
} MlaStatus;

typedef enum MlaCorrelation {
  MLA_CORRELATION_PEARSON = 0,
  MLA_CORRELATION_SPEARMAN = 1,
  MLA_CORRELATION_KENDALL = 2,
} MlaCorrelation;

typedef enum MlaAlternative {
  MLA_ALTERNATIVE_GREATER = 0,
  MLA_ALTERNATIVE_LESS = 1,
  MLA_ALTERNATIVE_TWO_SIDED = 2,
} MlaAlternative;

/**
 * Hidden Markov model with Gaussian emissions.
 */
typedef struct MlaHmm MlaHmm;

/**
 * Interval representation.
 */
typedef struct MlaRepresentation MlaRepresentation;

/**
 * Sampled signal.
 */
typedef struct MlaSignal MlaSignal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mla_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mla_last_error(void);

/**
 * Release a string returned by this library.
 */
void mla_string_free(char *s);

/**
 * Copy `len` samples into a new signal whose first sample sits at `start`.
 */
enum MlaStatus mla_signal_new(const double *samples,
                              size_t len,
                              int64_t start,
                              struct MlaSignal **out);

void mla_signal_free(struct MlaSignal *s);

/**
 * Number of samples, 0 for NULL.
 */
size_t mla_signal_len(const struct MlaSignal *s);

/**
 * Coordinate of the first sample, 0 for NULL.
 */
int64_t mla_signal_start(const struct MlaSignal *s);

/**
 * Copy the samples into `out`, which must hold `cap >= len` values.
 */
enum MlaStatus mla_signal_samples(const struct MlaSignal *s, double *out, size_t cap);

/**
 * Normalize to `[0, 1]` and sample at `k` thresholds.
 */
enum MlaStatus mla_transform(const struct MlaSignal *s, size_t k, struct MlaRepresentation **out);

/**
 * Sample a signal already in `[0, 1]` at `k` thresholds.
 */
enum MlaStatus mla_horizontal_sampling(const struct MlaSignal *s,
                                       size_t k,
                                       struct MlaRepresentation **out);

enum MlaStatus mla_reconstruct(const struct MlaRepresentation *rep, struct MlaSignal **out);

void mla_representation_free(struct MlaRepresentation *rep);

/**
 * Number of thresholds K, 0 for NULL.
 */
size_t mla_representation_levels(const struct MlaRepresentation *rep);

/**
 * Interval count at 1-based `level`.
 */
enum MlaStatus mla_representation_level_len(const struct MlaRepresentation *rep,
                                            size_t level,
                                            size_t *out);

/**
 * Threshold of 1-based `level`.
 */
enum MlaStatus mla_representation_threshold(const struct MlaRepresentation *rep,
                                            size_t level,
                                            double *out);

/**
 * Endpoints of interval `index` (0-based) at 1-based `level`.
 */
enum MlaStatus mla_representation_interval(const struct MlaRepresentation *rep,
                                           size_t level,
                                           size_t index,
                                           double *start,
                                           double *end);

/**
 * Serialize to JSON; release the result with `mla_string_free`.
 */
enum MlaStatus mla_representation_to_json(const struct MlaRepresentation *rep, char **out);

enum MlaStatus mla_representation_from_json(const char *json, struct MlaRepresentation **out);

/**
 * Tree kernel between the interval trees of two representations.
 */
enum MlaStatus mla_tree_kernel(const struct MlaRepresentation *a,
                               const struct MlaRepresentation *b,
                               double delta,
                               double lambda,
                               bool normalize,
                               double *out);

/**
 * Convolution kernel between two equal-length signals.
 */
enum MlaStatus mla_conv_kernel(const struct MlaSignal *x,
                               const struct MlaSignal *y,
                               size_t k,
                               double gamma,
                               double *out);

enum MlaStatus mla_correlation(const double *x,
                               const double *y,
                               size_t len,
                               enum MlaCorrelation method,
                               double *out);

/**
 * Wilcoxon rank-sum test. `w` receives the rank sum of `y`; `Greater`
 * means `y` tends to exceed `x`.
 */
enum MlaStatus mla_wilcoxon(const double *x,
                            size_t nx,
                            const double *y,
                            size_t ny,
                            enum MlaAlternative alternative,
                            double *w,
                            double *p);

/**
 * Parse a model from JSON (`labels`, `A`, `pi`, `emissions`).
 */
enum MlaStatus mla_hmm_from_json(const char *json, struct MlaHmm **out);

enum MlaStatus mla_hmm_to_json(const struct MlaHmm *h, char **out);

void mla_hmm_free(struct MlaHmm *h);

/**
 * Number of states, 0 for NULL.
 */
size_t mla_hmm_states(const struct MlaHmm *h);

/**
 * Forward log-likelihood of `len` observations.
 */
enum MlaStatus mla_hmm_log_likelihood(const struct MlaHmm *h,
                                      const double *obs,
                                      size_t len,
                                      double *out);

/**
 * Most likely state path, written to `path` (room for `len` entries),
 * and its joint log-probability.
 */
enum MlaStatus mla_hmm_viterbi(const struct MlaHmm *h,
                               const double *obs,
                               size_t len,
                               size_t *path,
                               double *log_prob);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MLA_KIT_H */
