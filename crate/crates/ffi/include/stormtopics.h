#ifndef STORMTOPICS_H
#define STORMTOPICS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StStatus {
  ST_STATUS_OK = 0,
  ST_STATUS_INTERNAL = 1,
  ST_STATUS_ARGUMENT = 2,
  ST_STATUS_IO = 3,
  ST_STATUS_EMPTY = 4,
  ST_STATUS_NUMERICAL = 5,
  ST_STATUS_NULL_POINTER = 6,
  ST_STATUS_PANIC = 7,
} StStatus;

/**
 * Opaque corpus handle.
 */
typedef struct StCorpus StCorpus;

/**
 * Opaque fitted-model handle.
 */
typedef struct StModel StModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *st_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *st_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void st_string_free(char *s);

/**
 * Loads a corpus archive directory written by `stormtopics ingest`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` a writable pointer.
 */
enum StStatus st_corpus_load(const char *dir, struct StCorpus **out);

/**
 * Tokenizes a JSONL message file with the bundled English stop list and
 * drops words seen fewer than `min_count` times.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a writable pointer.
 */
enum StStatus st_corpus_ingest(const char *path, uint64_t min_count, struct StCorpus **out);

/**
 * Document, token and vocabulary counts. Any out pointer may be null.
 *
 * # Safety
 * `corpus` must be a live handle.
 */
enum StStatus st_corpus_sizes(const struct StCorpus *corpus,
                              size_t *num_docs,
                              uint64_t *num_tokens,
                              size_t *vocab_size);

/**
 * Splits off a held-out test set. The test corpus shares the training
 * vocabulary, so a model fit on `out_train` can score `out_test`.
 *
 * # Safety
 * `corpus` must be a live handle; both out pointers writable.
 */
enum StStatus st_corpus_split(const struct StCorpus *corpus,
                              double ratio,
                              uint64_t seed,
                              struct StCorpus **out_train,
                              struct StCorpus **out_test);

/**
 * # Safety
 * `corpus` must be null or a handle not yet freed.
 */
void st_corpus_free(struct StCorpus *corpus);

/**
 * Fits a topic model by collapsed Gibbs sampling. `alpha <= 0` selects
 * 50/K. Sampling runs `burn_in` sweeps, then keeps `samples` states spaced
 * `lag` sweeps apart and averages their estimates.
 *
 * # Safety
 * `corpus` must be a live handle; `out` writable.
 */
enum StStatus st_model_train(const struct StCorpus *corpus,
                             size_t k,
                             double alpha,
                             double beta,
                             uint64_t burn_in,
                             uint64_t samples,
                             uint64_t lag,
                             uint64_t seed,
                             struct StModel **out);

/**
 * Loads a model directory written by `stormtopics train`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` writable.
 */
enum StStatus st_model_load(const char *dir, struct StModel **out);

/**
 * Topic, vocabulary and document counts. Any out pointer may be null.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum StStatus st_model_sizes(const struct StModel *model,
                             size_t *num_topics,
                             size_t *num_words,
                             size_t *num_docs);

/**
 * Copies the word distribution of topic `k` into `buf` (length = vocabulary size).
 *
 * # Safety
 * `model` must be a live handle; `buf` must hold `len` doubles.
 */
enum StStatus st_model_phi(const struct StModel *model, size_t k, double *buf, size_t len);

/**
 * Copies the topic mixture of document `doc` into `buf` (length = K).
 *
 * # Safety
 * `model` must be a live handle; `buf` must hold `len` doubles.
 */
enum StStatus st_model_theta(const struct StModel *model, size_t doc, double *buf, size_t len);

/**
 * Top `n` words of topic `k` as a JSON array of `{"word", "p"}` objects.
 * Free the result with [`st_string_free`].
 *
 * # Safety
 * `model` must be a live handle; `out` writable.
 */
enum StStatus st_model_top_words_json(const struct StModel *model, size_t k, size_t n, char **out);

/**
 * Held-out perplexity of `test`, which must share the model's vocabulary
 * (see [`st_corpus_split`]). `alpha <= 0` uses the model's own alpha.
 *
 * # Safety
 * Both handles must be live; `out` writable.
 */
enum StStatus st_model_perplexity(const struct StModel *model,
                                  const struct StCorpus *test,
                                  double alpha,
                                  uint64_t burn_in,
                                  uint64_t samples,
                                  uint64_t lag,
                                  uint64_t seed,
                                  double *out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void st_model_free(struct StModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STORMTOPICS_H */
