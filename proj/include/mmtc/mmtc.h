/* mmtc — controllable symbolic music pipeline.
 *
 * C interface to the mmtc core: event-token codec with grammar checking,
 * corpus handling, training, grammar-masked conditional sampling, and the
 * objective evaluation metrics.
 *
 * Conventions:
 *   - Every fallible function returns mmtc_status; MMTC_OK is 0.
 *   - On failure, mmtc_last_error() returns a message for the calling
 *     thread, valid until its next mmtc call.
 *   - Objects are opaque handles released with their mmtc_*_free function.
 *     Freeing NULL is a no-op. Buffers returned through out-parameters are
 *     released with mmtc_buffer_free unless documented otherwise.
 */

#ifndef MMTC_H
#define MMTC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef MMTC_API
#define MMTC_API __attribute__((visibility("default")))
#endif

typedef enum mmtc_status {
  MMTC_OK = 0,
  MMTC_ERR_INVALID_ARGUMENT = 1,
  MMTC_ERR_IO = 2,
  MMTC_ERR_PARSE = 3,
  MMTC_ERR_GRAMMAR = 4,
  MMTC_ERR_STATE = 5,
  MMTC_ERR_INTERNAL = 6,
} mmtc_status;

typedef enum mmtc_variant {
  MMTC_VARIANT_UNCOND = 0,
  MMTC_VARIANT_MMT_I = 1,
  MMTC_VARIANT_MMT_G = 2,
  MMTC_VARIANT_MMT_GI = 3,
} mmtc_variant;

typedef enum mmtc_subset {
  MMTC_SUBSET_FULL = 0,
  MMTC_SUBSET_METADATA = 1,
  MMTC_SUBSET_GENRE = 2,
} mmtc_subset;

typedef struct mmtc_tables mmtc_tables;
typedef struct mmtc_song mmtc_song;
typedef struct mmtc_corpus mmtc_corpus;
typedef struct mmtc_vocab mmtc_vocab;
typedef struct mmtc_model mmtc_model;
typedef struct mmtc_token_list mmtc_token_list;

MMTC_API const char* mmtc_version(void);
MMTC_API const char* mmtc_last_error(void);
MMTC_API void mmtc_buffer_free(void* buffer);

/* ---- canonical tables ------------------------------------------------- */

MMTC_API mmtc_status mmtc_tables_builtin(mmtc_tables** out);
MMTC_API mmtc_status mmtc_tables_load(const char* path, mmtc_tables** out);
MMTC_API mmtc_status mmtc_tables_save(const mmtc_tables* tables, const char* path);
MMTC_API void mmtc_tables_free(mmtc_tables* tables);
MMTC_API size_t mmtc_tables_num_instruments(const mmtc_tables* tables);
MMTC_API size_t mmtc_tables_num_genres(const mmtc_tables* tables);
MMTC_API const char* mmtc_tables_instrument_name(const mmtc_tables* tables, int id);
MMTC_API const char* mmtc_tables_genre_name(const mmtc_tables* tables, int id);

/* ---- songs ------------------------------------------------------------ */

/* Loads one interchange-format JSON song, mapping external programs and
 * genre names through the tables and normalizing the result. */
MMTC_API mmtc_status mmtc_song_load_json(const char* path, const mmtc_tables* tables,
                                         mmtc_song** out);
MMTC_API mmtc_status mmtc_song_save_json(const mmtc_song* song, const mmtc_tables* tables,
                                         const char* path);
MMTC_API void mmtc_song_free(mmtc_song* song);

/* Canonical normalization: drops notes beyond beat 63, clips durations,
 * merges/sorts tracks. Out-params may be NULL. */
MMTC_API mmtc_status mmtc_song_normalize(mmtc_song* song, size_t* dropped_notes,
                                         size_t* clipped_durations);
/* Writes up to `capacity` invariant violations as NUL-terminated strings into
 * caller-provided `messages[i]` slots of size `message_size`. `*count`
 * receives the total number of violations. */
MMTC_API mmtc_status mmtc_song_validate(const mmtc_song* song, char** messages,
                                        size_t capacity, size_t message_size,
                                        size_t* count);

MMTC_API size_t mmtc_song_num_tracks(const mmtc_song* song);
MMTC_API size_t mmtc_song_num_notes(const mmtc_song* song);
MMTC_API int mmtc_song_track_program(const mmtc_song* song, size_t track);
MMTC_API int mmtc_song_track_is_drum(const mmtc_song* song, size_t track);
MMTC_API size_t mmtc_song_num_genre_tags(const mmtc_song* song);
MMTC_API int mmtc_song_genre_tag(const mmtc_song* song, size_t index);

/* ---- evaluation metrics ------------------------------------------------ */

MMTC_API mmtc_status mmtc_metric_pitch_class_entropy(const mmtc_song* song, double* out);
MMTC_API mmtc_status mmtc_metric_scale_consistency(const mmtc_song* song, double* out);
MMTC_API mmtc_status mmtc_metric_groove_consistency(const mmtc_song* song, double* out);
/* Mean and the 95% Gaussian confidence half-width (1.96 * s / sqrt(n)). */
MMTC_API mmtc_status mmtc_metric_aggregate(const double* values, size_t n, double* mean,
                                           double* ci95);

/* ---- vocabulary --------------------------------------------------------- */

MMTC_API mmtc_status mmtc_vocab_build(int include_tags, int include_instruments,
                                      mmtc_vocab** out);
/* The vocabulary a variant trains and samples with. */
MMTC_API mmtc_status mmtc_vocab_for_variant(mmtc_variant variant, mmtc_vocab** out);
MMTC_API mmtc_status mmtc_vocab_save(const mmtc_vocab* vocab, const char* path);
MMTC_API mmtc_status mmtc_vocab_load(const char* path, mmtc_vocab** out);
MMTC_API void mmtc_vocab_free(mmtc_vocab* vocab);
MMTC_API size_t mmtc_vocab_size(const mmtc_vocab* vocab);
MMTC_API uint64_t mmtc_vocab_fingerprint(const mmtc_vocab* vocab);

/* For each target id, the base id holding the same event, or -1 when newly
 * introduced. `map` must hold mmtc_vocab_size(target) entries. Fails when
 * base contains an event absent from target. */
MMTC_API mmtc_status mmtc_vocab_extend(const mmtc_vocab* base, const mmtc_vocab* target,
                                       int32_t* map, size_t map_len);

/* ---- codec -------------------------------------------------------------- */

/* Encodes a normalized song. `*out_ids` is allocated by the library; release
 * with mmtc_buffer_free. */
MMTC_API mmtc_status mmtc_encode(const mmtc_song* song, mmtc_variant variant,
                                 const mmtc_vocab* vocab, int32_t** out_ids,
                                 size_t* out_len);
/* Decodes a token sequence; grammar violations fail with index and expected
 * kinds in the error message. */
MMTC_API mmtc_status mmtc_decode(const int32_t* ids, size_t len, mmtc_variant variant,
                                 const mmtc_vocab* vocab, const mmtc_tables* tables,
                                 mmtc_song** out);

/* ---- token files -------------------------------------------------------- */

MMTC_API mmtc_status mmtc_token_list_new(mmtc_token_list** out);
MMTC_API void mmtc_token_list_free(mmtc_token_list* list);
MMTC_API mmtc_status mmtc_token_list_append(mmtc_token_list* list, const int32_t* ids,
                                            size_t len);
MMTC_API size_t mmtc_token_list_size(const mmtc_token_list* list);
MMTC_API mmtc_status mmtc_token_list_get(const mmtc_token_list* list, size_t index,
                                         const int32_t** ids, size_t* len);

/* Header line `#vocab <fingerprint>`, one space-separated sequence per line. */
MMTC_API mmtc_status mmtc_token_file_write(const char* path, const mmtc_vocab* vocab,
                                           const mmtc_token_list* list);
MMTC_API mmtc_status mmtc_token_file_read(const char* path, mmtc_token_list** out,
                                          uint64_t* vocab_fingerprint);

/* ---- corpus -------------------------------------------------------------- */

typedef struct mmtc_load_report {
  size_t skipped_tracks;
  size_t dropped_notes;
  size_t clipped_durations;
  size_t dropped_genres;
} mmtc_load_report;

/* Loads every *.json under dir (ids are filename stems, sorted). */
MMTC_API mmtc_status mmtc_corpus_load(const char* dir, const mmtc_tables* tables,
                                      mmtc_load_report* report, mmtc_corpus** out);
MMTC_API void mmtc_corpus_free(mmtc_corpus* corpus);
MMTC_API size_t mmtc_corpus_size(const mmtc_corpus* corpus);
MMTC_API const char* mmtc_corpus_id(const mmtc_corpus* corpus, size_t index);
/* Borrowed pointer, valid while the corpus lives. */
MMTC_API const mmtc_song* mmtc_corpus_song(const mmtc_corpus* corpus, size_t index);

MMTC_API mmtc_status mmtc_corpus_filter(const mmtc_corpus* corpus, mmtc_subset subset,
                                        mmtc_corpus** out);

/* Deterministic 90/5/5 split by keyed hash of the entry id. `split[i]` is
 * 0 = train, 1 = valid, 2 = test. */
MMTC_API mmtc_status mmtc_corpus_split(const mmtc_corpus* corpus, uint64_t seed,
                                       uint8_t* split, size_t len);

/* Frequency tables: genre counts per song, instrument counts per track,
 * descending. Arrays are library-allocated; free with mmtc_buffer_free. */
MMTC_API mmtc_status mmtc_corpus_stats(const mmtc_corpus* corpus, int32_t** genre_ids,
                                       uint64_t** genre_counts, size_t* num_genres,
                                       int32_t** instrument_ids,
                                       uint64_t** instrument_counts,
                                       size_t* num_instruments);

/* Encodes every corpus entry under the variant, truncating to max_len at a
 * note-group boundary (condition prefix always kept). */
MMTC_API mmtc_status mmtc_corpus_tokenize(const mmtc_corpus* corpus, mmtc_variant variant,
                                          const mmtc_vocab* vocab, int max_len,
                                          mmtc_token_list** out);

/* ---- model --------------------------------------------------------------- */

typedef struct mmtc_model_config {
  int32_t dim;
  int32_t heads;
  int32_t layers;
  int32_t max_len;
  uint64_t seed;
} mmtc_model_config;

typedef struct mmtc_train_options {
  double beta1;        /* 0.9 */
  double beta2;        /* 0.999 */
  double weight_decay; /* 0.01 */
  double lr0;          /* 0.0005 pretrain, 0.0001 finetune */
  int64_t decay_steps; /* linear decay to 0.1*lr0, then constant */
  int64_t steps;
  int32_t batch_size;
  int32_t validate_every; /* 0 disables validation logging */
  uint64_t shuffle_seed;
} mmtc_train_options;

typedef void (*mmtc_train_log_fn)(void* user, int64_t step, double lr, double train_loss,
                                  double valid_loss /* NaN when unavailable */);

/* Fresh model bound to the vocabulary: normal(0, 0.02) weights, zero biases,
 * unit norm gains, drawn from config->seed. */
MMTC_API mmtc_status mmtc_model_init(const mmtc_model_config* config,
                                     const mmtc_vocab* vocab, mmtc_model** out);
MMTC_API void mmtc_model_free(mmtc_model* model);
MMTC_API mmtc_status mmtc_model_save(const mmtc_model* model, const char* path);
MMTC_API mmtc_status mmtc_model_load(const char* path, mmtc_model** out);
MMTC_API uint64_t mmtc_model_vocab_fingerprint(const mmtc_model* model);
MMTC_API int64_t mmtc_model_step(const mmtc_model* model);
MMTC_API mmtc_status mmtc_model_num_params(const mmtc_model* model, size_t* out);

MMTC_API double mmtc_lr_at(int64_t step, double lr0, int64_t decay_steps);

/* Deterministic training loop over the token lists. */
MMTC_API mmtc_status mmtc_train(mmtc_model* model, const mmtc_token_list* train,
                                const mmtc_token_list* valid,
                                const mmtc_train_options* options, mmtc_train_log_fn log,
                                void* user);

MMTC_API mmtc_status mmtc_validation_loss(const mmtc_model* model,
                                          const mmtc_token_list* seqs, int batch_size,
                                          double* out);

/* Vocabulary-extension initialization for finetuning: shared embedding and
 * output rows copied exactly, new rows drawn from normal(0, 0.02), optimizer
 * state and step reset. */
MMTC_API mmtc_status mmtc_finetune_init(const mmtc_model* pretrained,
                                        const mmtc_vocab* base_vocab,
                                        const mmtc_vocab* target_vocab, uint64_t seed,
                                        mmtc_model** out);

/* ---- generation ----------------------------------------------------------- */

typedef struct mmtc_generation_condition {
  mmtc_variant variant;
  const int32_t* tags; /* required nonempty for MMT-G / MMT-GI */
  size_t num_tags;
  const int32_t* programs; /* required nonempty for MMT-I / MMT-GI */
  size_t num_programs;
  int enforce_condition; /* restrict note instruments to the declared list */
} mmtc_generation_condition;

typedef struct mmtc_sampling_config {
  double temperature; /* > 0 */
  int32_t top_k;      /* >= 1; 1 is argmax */
  int32_t max_tokens; /* total output cap, prefix included */
  uint64_t seed;
} mmtc_sampling_config;

/* Grammar-masked sampling; the result starts with the condition prefix and
 * always parses. Release `*out_ids` with mmtc_buffer_free. */
MMTC_API mmtc_status mmtc_generate(const mmtc_model* model, const mmtc_vocab* vocab,
                                   const mmtc_generation_condition* condition,
                                   const mmtc_sampling_config* sampling,
                                   int32_t** out_ids, size_t* out_len);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MMTC_H */
