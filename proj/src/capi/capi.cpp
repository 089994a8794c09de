#include "mmtc/mmtc.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "core/codec.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/generate.hpp"
#include "core/metrics.hpp"
#include "core/trainer.hpp"

using mmtc::Error;
using mmtc::ErrorCode;

struct mmtc_tables {
  mmtc::CanonicalTables value;
};
struct mmtc_song {
  mmtc::Song value;
};
struct mmtc_vocab {
  mmtc::Vocabulary value;
};
struct mmtc_corpus {
  std::vector<std::string> ids;
  std::vector<mmtc_song> songs;
};
struct mmtc_model {
  mmtc::ModelCheckpoint ckpt;
};
struct mmtc_token_list {
  std::vector<std::vector<int32_t>> seqs;
};

namespace {

thread_local std::string g_last_error;

mmtc_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return MMTC_ERR_INVALID_ARGUMENT;
    case ErrorCode::io: return MMTC_ERR_IO;
    case ErrorCode::parse: return MMTC_ERR_PARSE;
    case ErrorCode::grammar: return MMTC_ERR_GRAMMAR;
    case ErrorCode::state: return MMTC_ERR_STATE;
    case ErrorCode::internal: return MMTC_ERR_INTERNAL;
  }
  return MMTC_ERR_INTERNAL;
}

template <typename Fn>
mmtc_status wrap(Fn&& fn) {
  try {
    fn();
    return MMTC_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MMTC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MMTC_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) mmtc::fail(ErrorCode::invalid_argument, what);
}

mmtc::Variant to_variant(mmtc_variant v) {
  switch (v) {
    case MMTC_VARIANT_UNCOND: return mmtc::Variant::uncond;
    case MMTC_VARIANT_MMT_I: return mmtc::Variant::mmt_i;
    case MMTC_VARIANT_MMT_G: return mmtc::Variant::mmt_g;
    case MMTC_VARIANT_MMT_GI: return mmtc::Variant::mmt_gi;
  }
  mmtc::fail(ErrorCode::invalid_argument, "unknown variant");
}

mmtc::Subset to_subset(mmtc_subset s) {
  switch (s) {
    case MMTC_SUBSET_FULL: return mmtc::Subset::full;
    case MMTC_SUBSET_METADATA: return mmtc::Subset::metadata;
    case MMTC_SUBSET_GENRE: return mmtc::Subset::genre;
  }
  mmtc::fail(ErrorCode::invalid_argument, "unknown subset");
}

int32_t* copy_out(const std::vector<int32_t>& ids) {
  auto* buffer = static_cast<int32_t*>(
      std::malloc(sizeof(int32_t) * std::max<size_t>(ids.size(), 1)));
  if (!buffer) mmtc::fail(ErrorCode::internal, "out of memory");
  std::memcpy(buffer, ids.data(), sizeof(int32_t) * ids.size());
  return buffer;
}

} // namespace

extern "C" {

const char* mmtc_version(void) { return "0.1.0"; }

const char* mmtc_last_error(void) { return g_last_error.c_str(); }

void mmtc_buffer_free(void* buffer) { std::free(buffer); }

/* ---- tables ---- */

mmtc_status mmtc_tables_builtin(mmtc_tables** out) {
  return wrap([&] {
    require(out, "out is null");
    *out = new mmtc_tables{mmtc::CanonicalTables::builtin()};
  });
}

mmtc_status mmtc_tables_load(const char* path, mmtc_tables** out) {
  return wrap([&] {
    require(path && out, "null argument");
    *out = new mmtc_tables{mmtc::CanonicalTables::load_json(path)};
  });
}

mmtc_status mmtc_tables_save(const mmtc_tables* tables, const char* path) {
  return wrap([&] {
    require(tables && path, "null argument");
    tables->value.save_json(path);
  });
}

void mmtc_tables_free(mmtc_tables* tables) { delete tables; }

size_t mmtc_tables_num_instruments(const mmtc_tables* tables) {
  return tables ? tables->value.instruments().size() : 0;
}

size_t mmtc_tables_num_genres(const mmtc_tables* tables) {
  return tables ? tables->value.genres().size() : 0;
}

const char* mmtc_tables_instrument_name(const mmtc_tables* tables, int id) {
  if (!tables || id < 0 || id >= static_cast<int>(tables->value.instruments().size())) {
    return nullptr;
  }
  return tables->value.instruments()[id].name.c_str();
}

const char* mmtc_tables_genre_name(const mmtc_tables* tables, int id) {
  if (!tables || id < 0 || id >= static_cast<int>(tables->value.genres().size())) {
    return nullptr;
  }
  return tables->value.genres()[id].c_str();
}

/* ---- songs ---- */

mmtc_status mmtc_song_load_json(const char* path, const mmtc_tables* tables,
                                mmtc_song** out) {
  return wrap([&] {
    require(path && tables && out, "null argument");
    *out = new mmtc_song{mmtc::load_song_json(path, tables->value)};
  });
}

mmtc_status mmtc_song_save_json(const mmtc_song* song, const mmtc_tables* tables,
                                const char* path) {
  return wrap([&] {
    require(song && tables && path, "null argument");
    mmtc::save_song_json(path, song->value, tables->value);
  });
}

void mmtc_song_free(mmtc_song* song) { delete song; }

mmtc_status mmtc_song_normalize(mmtc_song* song, size_t* dropped_notes,
                                size_t* clipped_durations) {
  return wrap([&] {
    require(song, "song is null");
    const auto report = mmtc::quantize_and_sort(song->value);
    if (dropped_notes) *dropped_notes = report.dropped_notes;
    if (clipped_durations) *clipped_durations = report.clipped_durations;
  });
}

mmtc_status mmtc_song_validate(const mmtc_song* song, char** messages, size_t capacity,
                               size_t message_size, size_t* count) {
  return wrap([&] {
    require(song && count, "null argument");
    const auto violations = mmtc::validate_song(song->value);
    *count = violations.size();
    for (size_t i = 0; i < std::min(capacity, violations.size()); ++i) {
      require(messages && messages[i] && message_size > 0, "bad message buffer");
      std::snprintf(messages[i], message_size, "%s", violations[i].c_str());
    }
  });
}

size_t mmtc_song_num_tracks(const mmtc_song* song) {
  return song ? song->value.tracks.size() : 0;
}

size_t mmtc_song_num_notes(const mmtc_song* song) {
  return song ? song->value.note_count() : 0;
}

int mmtc_song_track_program(const mmtc_song* song, size_t track) {
  if (!song || track >= song->value.tracks.size()) return -1;
  return song->value.tracks[track].program;
}

int mmtc_song_track_is_drum(const mmtc_song* song, size_t track) {
  if (!song || track >= song->value.tracks.size()) return 0;
  return song->value.tracks[track].is_drum ? 1 : 0;
}

size_t mmtc_song_num_genre_tags(const mmtc_song* song) {
  return song ? song->value.genre_tags.size() : 0;
}

int mmtc_song_genre_tag(const mmtc_song* song, size_t index) {
  if (!song || index >= song->value.genre_tags.size()) return -1;
  return song->value.genre_tags[index];
}

/* ---- metrics ---- */

mmtc_status mmtc_metric_pitch_class_entropy(const mmtc_song* song, double* out) {
  return wrap([&] {
    require(song && out, "null argument");
    *out = mmtc::pitch_class_entropy(song->value);
  });
}

mmtc_status mmtc_metric_scale_consistency(const mmtc_song* song, double* out) {
  return wrap([&] {
    require(song && out, "null argument");
    *out = mmtc::scale_consistency(song->value);
  });
}

mmtc_status mmtc_metric_groove_consistency(const mmtc_song* song, double* out) {
  return wrap([&] {
    require(song && out, "null argument");
    *out = mmtc::groove_consistency(song->value);
  });
}

mmtc_status mmtc_metric_aggregate(const double* values, size_t n, double* mean,
                                  double* ci95) {
  return wrap([&] {
    require(values && mean && ci95, "null argument");
    const auto report = mmtc::aggregate(std::vector<double>(values, values + n));
    *mean = report.mean;
    *ci95 = report.ci95;
  });
}

/* ---- vocabulary ---- */

mmtc_status mmtc_vocab_build(int include_tags, int include_instruments, mmtc_vocab** out) {
  return wrap([&] {
    require(out, "out is null");
    *out = new mmtc_vocab{
        mmtc::Vocabulary::build(include_tags != 0, include_instruments != 0)};
  });
}

mmtc_status mmtc_vocab_for_variant(mmtc_variant variant, mmtc_vocab** out) {
  return wrap([&] {
    require(out, "out is null");
    *out = new mmtc_vocab{mmtc::variant_vocab(to_variant(variant))};
  });
}

mmtc_status mmtc_vocab_save(const mmtc_vocab* vocab, const char* path) {
  return wrap([&] {
    require(vocab && path, "null argument");
    vocab->value.save(path);
  });
}

mmtc_status mmtc_vocab_load(const char* path, mmtc_vocab** out) {
  return wrap([&] {
    require(path && out, "null argument");
    *out = new mmtc_vocab{mmtc::Vocabulary::load(path)};
  });
}

void mmtc_vocab_free(mmtc_vocab* vocab) { delete vocab; }

size_t mmtc_vocab_size(const mmtc_vocab* vocab) { return vocab ? vocab->value.size() : 0; }

uint64_t mmtc_vocab_fingerprint(const mmtc_vocab* vocab) {
  return vocab ? vocab->value.fingerprint() : 0;
}

mmtc_status mmtc_vocab_extend(const mmtc_vocab* base, const mmtc_vocab* target,
                              int32_t* map, size_t map_len) {
  return wrap([&] {
    require(base && target && map, "null argument");
    require(map_len == target->value.size(), "map length must equal target vocab size");
    const auto shared = mmtc::extend_vocab(base->value, target->value);
    for (size_t i = 0; i < map_len; ++i) {
      map[i] = shared.base_id_of_target[i];
    }
  });
}

/* ---- codec ---- */

mmtc_status mmtc_encode(const mmtc_song* song, mmtc_variant variant, const mmtc_vocab* vocab,
                        int32_t** out_ids, size_t* out_len) {
  return wrap([&] {
    require(song && vocab && out_ids && out_len, "null argument");
    const auto ids = mmtc::encode_ids(song->value, to_variant(variant), vocab->value);
    *out_ids = copy_out(ids);
    *out_len = ids.size();
  });
}

mmtc_status mmtc_decode(const int32_t* ids, size_t len, mmtc_variant variant,
                        const mmtc_vocab* vocab, const mmtc_tables* tables,
                        mmtc_song** out) {
  return wrap([&] {
    require(vocab && tables && out, "null argument");
    require(ids || len == 0, "null ids");
    *out = new mmtc_song{mmtc::decode_ids(std::vector<int32_t>(ids, ids + len),
                                          to_variant(variant), vocab->value,
                                          tables->value)};
  });
}

/* ---- token lists ---- */

mmtc_status mmtc_token_list_new(mmtc_token_list** out) {
  return wrap([&] {
    require(out, "out is null");
    *out = new mmtc_token_list{};
  });
}

void mmtc_token_list_free(mmtc_token_list* list) { delete list; }

mmtc_status mmtc_token_list_append(mmtc_token_list* list, const int32_t* ids, size_t len) {
  return wrap([&] {
    require(list, "list is null");
    require(ids || len == 0, "null ids");
    list->seqs.emplace_back(ids, ids + len);
  });
}

size_t mmtc_token_list_size(const mmtc_token_list* list) {
  return list ? list->seqs.size() : 0;
}

mmtc_status mmtc_token_list_get(const mmtc_token_list* list, size_t index,
                                const int32_t** ids, size_t* len) {
  return wrap([&] {
    require(list && ids && len, "null argument");
    require(index < list->seqs.size(), "index out of range");
    *ids = list->seqs[index].data();
    *len = list->seqs[index].size();
  });
}

mmtc_status mmtc_token_file_write(const char* path, const mmtc_vocab* vocab,
                                  const mmtc_token_list* list) {
  return wrap([&] {
    require(path && vocab && list, "null argument");
    mmtc::write_token_file(path, vocab->value, list->seqs);
  });
}

mmtc_status mmtc_token_file_read(const char* path, mmtc_token_list** out,
                                 uint64_t* vocab_fingerprint) {
  return wrap([&] {
    require(path && out, "null argument");
    auto file = mmtc::read_token_file(path);
    if (vocab_fingerprint) *vocab_fingerprint = file.vocab_fingerprint;
    *out = new mmtc_token_list{std::move(file.sequences)};
  });
}

/* ---- corpus ---- */

mmtc_status mmtc_corpus_load(const char* dir, const mmtc_tables* tables,
                             mmtc_load_report* report, mmtc_corpus** out) {
  return wrap([&] {
    require(dir && tables && out, "null argument");
    mmtc::LoadReport rep;
    auto entries = mmtc::load_corpus(dir, tables->value, &rep);
    if (report) {
      report->skipped_tracks = rep.skipped_tracks;
      report->dropped_notes = rep.dropped_notes;
      report->clipped_durations = rep.clipped_durations;
      report->dropped_genres = rep.dropped_genres;
    }
    auto* corpus = new mmtc_corpus{};
    for (auto& entry : entries) {
      corpus->ids.push_back(std::move(entry.id));
      corpus->songs.push_back({std::move(entry.song)});
    }
    *out = corpus;
  });
}

void mmtc_corpus_free(mmtc_corpus* corpus) { delete corpus; }

size_t mmtc_corpus_size(const mmtc_corpus* corpus) {
  return corpus ? corpus->ids.size() : 0;
}

const char* mmtc_corpus_id(const mmtc_corpus* corpus, size_t index) {
  if (!corpus || index >= corpus->ids.size()) return nullptr;
  return corpus->ids[index].c_str();
}

const mmtc_song* mmtc_corpus_song(const mmtc_corpus* corpus, size_t index) {
  if (!corpus || index >= corpus->songs.size()) return nullptr;
  return &corpus->songs[index];
}

mmtc_status mmtc_corpus_filter(const mmtc_corpus* corpus, mmtc_subset subset,
                               mmtc_corpus** out) {
  return wrap([&] {
    require(corpus && out, "null argument");
    const auto which = to_subset(subset);
    auto* filtered = new mmtc_corpus{};
    for (size_t i = 0; i < corpus->ids.size(); ++i) {
      const auto& song = corpus->songs[i].value;
      const bool keep = which == mmtc::Subset::full ||
                        (which == mmtc::Subset::metadata && song.has_metadata) ||
                        (which == mmtc::Subset::genre && !song.genre_tags.empty());
      if (keep) {
        filtered->ids.push_back(corpus->ids[i]);
        filtered->songs.push_back({song});
      }
    }
    *out = filtered;
  });
}

mmtc_status mmtc_corpus_split(const mmtc_corpus* corpus, uint64_t seed, uint8_t* split,
                              size_t len) {
  return wrap([&] {
    require(corpus && split, "null argument");
    require(len == corpus->ids.size(), "split length must equal corpus size");
    std::vector<mmtc::CorpusEntry> entries(corpus->ids.size());
    for (size_t i = 0; i < corpus->ids.size(); ++i) entries[i].id = corpus->ids[i];
    const auto result = mmtc::split_corpus(entries, seed);
    for (size_t i : result.train) split[i] = 0;
    for (size_t i : result.valid) split[i] = 1;
    for (size_t i : result.test) split[i] = 2;
  });
}

mmtc_status mmtc_corpus_stats(const mmtc_corpus* corpus, int32_t** genre_ids,
                              uint64_t** genre_counts, size_t* num_genres,
                              int32_t** instrument_ids, uint64_t** instrument_counts,
                              size_t* num_instruments) {
  return wrap([&] {
    require(corpus && genre_ids && genre_counts && num_genres && instrument_ids &&
                instrument_counts && num_instruments,
            "null argument");
    std::vector<mmtc::CorpusEntry> entries;
    entries.reserve(corpus->ids.size());
    for (size_t i = 0; i < corpus->ids.size(); ++i) {
      entries.push_back({corpus->ids[i], corpus->songs[i].value});
    }
    const auto stats = mmtc::corpus_stats(entries);
    auto emit = [](const mmtc::FrequencyTable& table, int32_t** ids, uint64_t** counts,
                   size_t* n) {
      *n = table.rows.size();
      *ids = static_cast<int32_t*>(std::malloc(sizeof(int32_t) * std::max<size_t>(*n, 1)));
      *counts =
          static_cast<uint64_t*>(std::malloc(sizeof(uint64_t) * std::max<size_t>(*n, 1)));
      if (!*ids || !*counts) mmtc::fail(ErrorCode::internal, "out of memory");
      for (size_t i = 0; i < table.rows.size(); ++i) {
        (*ids)[i] = table.rows[i].first;
        (*counts)[i] = table.rows[i].second;
      }
    };
    emit(stats.genres, genre_ids, genre_counts, num_genres);
    emit(stats.instruments, instrument_ids, instrument_counts, num_instruments);
  });
}

mmtc_status mmtc_corpus_tokenize(const mmtc_corpus* corpus, mmtc_variant variant,
                                 const mmtc_vocab* vocab, int max_len,
                                 mmtc_token_list** out) {
  return wrap([&] {
    require(corpus && vocab && out, "null argument");
    require(max_len >= 8, "max_len too small");
    auto list = std::make_unique<mmtc_token_list>();
    for (const auto& song : corpus->songs) {
      auto ids = mmtc::encode_ids(song.value, to_variant(variant), vocab->value);
      list->seqs.push_back(
          mmtc::truncate_sequence(ids, static_cast<size_t>(max_len), vocab->value));
    }
    *out = list.release();
  });
}

/* ---- model ---- */

mmtc_status mmtc_model_init(const mmtc_model_config* config, const mmtc_vocab* vocab,
                            mmtc_model** out) {
  return wrap([&] {
    require(config && vocab && out, "null argument");
    mmtc::ModelConfig cfg;
    cfg.dim = config->dim;
    cfg.heads = config->heads;
    cfg.layers = config->layers;
    cfg.max_len = config->max_len;
    cfg.vocab_size = static_cast<int>(vocab->value.size());
    cfg.seed = config->seed;
    *out = new mmtc_model{mmtc::init_checkpoint(cfg, vocab->value.fingerprint())};
  });
}

void mmtc_model_free(mmtc_model* model) { delete model; }

mmtc_status mmtc_model_save(const mmtc_model* model, const char* path) {
  return wrap([&] {
    require(model && path, "null argument");
    mmtc::save_checkpoint(path, model->ckpt);
  });
}

mmtc_status mmtc_model_load(const char* path, mmtc_model** out) {
  return wrap([&] {
    require(path && out, "null argument");
    *out = new mmtc_model{mmtc::load_checkpoint(path)};
  });
}

uint64_t mmtc_model_vocab_fingerprint(const mmtc_model* model) {
  return model ? model->ckpt.vocab_fingerprint : 0;
}

int64_t mmtc_model_step(const mmtc_model* model) { return model ? model->ckpt.step : -1; }

mmtc_status mmtc_model_num_params(const mmtc_model* model, size_t* out) {
  return wrap([&] {
    require(model && out, "null argument");
    *out = model->ckpt.model.layout().total;
  });
}

double mmtc_lr_at(int64_t step, double lr0, int64_t decay_steps) {
  mmtc::OptimizerConfig opt;
  opt.lr0 = lr0;
  opt.decay_steps = decay_steps;
  return mmtc::lr_at(step, opt);
}

mmtc_status mmtc_train(mmtc_model* model, const mmtc_token_list* train,
                       const mmtc_token_list* valid, const mmtc_train_options* options,
                       mmtc_train_log_fn log, void* user) {
  return wrap([&] {
    require(model && train && options, "null argument");
    mmtc::TrainRunConfig cfg;
    cfg.opt.beta1 = options->beta1;
    cfg.opt.beta2 = options->beta2;
    cfg.opt.weight_decay = options->weight_decay;
    cfg.opt.lr0 = options->lr0;
    cfg.opt.decay_steps = options->decay_steps;
    cfg.steps = options->steps;
    cfg.batch_size = options->batch_size;
    cfg.validate_every = options->validate_every;
    cfg.shuffle_seed = options->shuffle_seed;
    static const std::vector<std::vector<int32_t>> kEmpty;
    const auto& valid_seqs = valid ? valid->seqs : kEmpty;
    mmtc::TrainLogFn log_fn;
    if (log) {
      log_fn = [log, user](const mmtc::TrainLogRow& row) {
        log(user, row.step, row.lr, row.train_loss,
            row.valid_loss ? *row.valid_loss : std::nan(""));
      };
    }
    mmtc::train_run(model->ckpt, train->seqs, valid_seqs, cfg, log_fn);
  });
}

mmtc_status mmtc_validation_loss(const mmtc_model* model, const mmtc_token_list* seqs,
                                 int batch_size, double* out) {
  return wrap([&] {
    require(model && seqs && out, "null argument");
    *out = mmtc::validation_loss(model->ckpt, seqs->seqs, batch_size);
  });
}

mmtc_status mmtc_finetune_init(const mmtc_model* pretrained, const mmtc_vocab* base_vocab,
                               const mmtc_vocab* target_vocab, uint64_t seed,
                               mmtc_model** out) {
  return wrap([&] {
    require(pretrained && base_vocab && target_vocab && out, "null argument");
    *out = new mmtc_model{mmtc::finetune_init(pretrained->ckpt, base_vocab->value,
                                              target_vocab->value, seed)};
  });
}

/* ---- generation ---- */

mmtc_status mmtc_generate(const mmtc_model* model, const mmtc_vocab* vocab,
                          const mmtc_generation_condition* condition,
                          const mmtc_sampling_config* sampling, int32_t** out_ids,
                          size_t* out_len) {
  return wrap([&] {
    require(model && vocab && condition && sampling && out_ids && out_len,
            "null argument");
    require(condition->tags || condition->num_tags == 0, "null tags");
    require(condition->programs || condition->num_programs == 0, "null programs");
    mmtc::GenerationCondition cond;
    cond.variant = to_variant(condition->variant);
    cond.tags.assign(condition->tags, condition->tags + condition->num_tags);
    cond.programs.assign(condition->programs,
                         condition->programs + condition->num_programs);
    cond.enforce_condition = condition->enforce_condition != 0;
    mmtc::SamplingConfig cfg;
    cfg.temperature = sampling->temperature;
    cfg.top_k = sampling->top_k;
    cfg.max_tokens = sampling->max_tokens;
    cfg.seed = sampling->seed;
    const auto ids = mmtc::generate(model->ckpt, vocab->value, cond, cfg);
    *out_ids = copy_out(ids);
    *out_len = ids.size();
  });
}

} // extern "C"
