// mmtc command-line front end. Talks to the core exclusively through the C
// API in mmtc/mmtc.h.

#include <CLI11.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <mmtc/mmtc.h>

#include "runconfig.hpp"

namespace fs = std::filesystem;

namespace {

[[noreturn]] void die(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  std::exit(1);
}

void check(mmtc_status status) {
  if (status != MMTC_OK) die(mmtc_last_error());
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  explicit Handle(T* p) : ptr(p) {}
  ~Handle() { Free(ptr); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
  Handle& operator=(Handle&& other) noexcept {
    if (this != &other) {
      Free(ptr);
      ptr = other.ptr;
      other.ptr = nullptr;
    }
    return *this;
  }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using TablesH = Handle<mmtc_tables, mmtc_tables_free>;
using SongH = Handle<mmtc_song, mmtc_song_free>;
using VocabH = Handle<mmtc_vocab, mmtc_vocab_free>;
using CorpusH = Handle<mmtc_corpus, mmtc_corpus_free>;
using ModelH = Handle<mmtc_model, mmtc_model_free>;
using TokenListH = Handle<mmtc_token_list, mmtc_token_list_free>;

struct Buffer {
  void* ptr = nullptr;
  ~Buffer() { mmtc_buffer_free(ptr); }
};

void load_tables(const std::string& path, TablesH& tables) {
  if (path.empty()) {
    check(mmtc_tables_builtin(tables.out()));
  } else {
    check(mmtc_tables_load(path.c_str(), tables.out()));
  }
}

mmtc_variant parse_variant(const std::string& name) {
  if (name == "uncond") return MMTC_VARIANT_UNCOND;
  if (name == "mmt-i") return MMTC_VARIANT_MMT_I;
  if (name == "mmt-g") return MMTC_VARIANT_MMT_G;
  if (name == "mmt-gi") return MMTC_VARIANT_MMT_GI;
  die("unknown variant: " + name + " (expected uncond|mmt-i|mmt-g|mmt-gi)");
}

mmtc_subset parse_subset(const std::string& name) {
  if (name == "full") return MMTC_SUBSET_FULL;
  if (name == "metadata") return MMTC_SUBSET_METADATA;
  if (name == "genre") return MMTC_SUBSET_GENRE;
  die("unknown subset: " + name + " (expected full|metadata|genre)");
}

void write_effective_config(const fs::path& dir, const RunConfig& config,
                            const std::string& extra) {
  std::ofstream out(dir / "effective.cfg");
  if (!out) die("cannot write " + (dir / "effective.cfg").string());
  out << config.dump() << extra;
}

std::string vocab_sibling(const std::string& ckpt_path) {
  return (fs::path(ckpt_path).parent_path() / "vocab.txt").string();
}

VocabH load_model_vocab(const std::string& vocab_path, const mmtc_model* model) {
  VocabH vocab;
  check(mmtc_vocab_load(vocab_path.c_str(), vocab.out()));
  if (mmtc_vocab_fingerprint(vocab.get()) != mmtc_model_vocab_fingerprint(model)) {
    die("checkpoint/vocabulary mismatch: " + vocab_path +
        " does not match the checkpoint fingerprint");
  }
  return vocab;
}

struct TrainLogSink {
  std::ofstream file;
  bool echo = true;

  static void callback(void* user, int64_t step, double lr, double train_loss,
                       double valid_loss) {
    auto* self = static_cast<TrainLogSink*>(user);
    char line[160];
    if (std::isnan(valid_loss)) {
      std::snprintf(line, sizeof(line), "%" PRId64 "\t%.8g\t%.6f\t-", step, lr, train_loss);
    } else {
      std::snprintf(line, sizeof(line), "%" PRId64 "\t%.8g\t%.6f\t%.6f", step, lr,
                    train_loss, valid_loss);
    }
    self->file << line << "\n";
    self->file.flush();
    if (self->echo) std::cout << line << "\n";
  }
};

// Splits a corpus into token lists for training and validation.
void tokenized_splits(const mmtc_corpus* corpus, mmtc_variant variant,
                      const mmtc_vocab* vocab, int max_len, uint64_t seed,
                      TokenListH& train, TokenListH& valid) {
  const size_t n = mmtc_corpus_size(corpus);
  std::vector<uint8_t> split(n);
  check(mmtc_corpus_split(corpus, seed, split.data(), n));
  TokenListH all;
  check(mmtc_corpus_tokenize(corpus, variant, vocab, max_len, all.out()));
  check(mmtc_token_list_new(train.out()));
  check(mmtc_token_list_new(valid.out()));
  for (size_t i = 0; i < n; ++i) {
    if (split[i] == 2) continue; // test split is left for evaluation runs
    const int32_t* ids = nullptr;
    size_t len = 0;
    check(mmtc_token_list_get(all.get(), i, &ids, &len));
    check(mmtc_token_list_append(split[i] == 0 ? train.get() : valid.get(), ids, len));
  }
}

int cmd_encode(const std::string& variant_name, const std::string& tables_path,
               const std::string& out_path, const std::vector<std::string>& inputs) {
  const mmtc_variant variant = parse_variant(variant_name);
  TablesH tables;
  load_tables(tables_path, tables);
  VocabH vocab;
  check(mmtc_vocab_for_variant(variant, vocab.out()));
  TokenListH list;
  check(mmtc_token_list_new(list.out()));
  for (const auto& input : inputs) {
    SongH song;
    check(mmtc_song_load_json(input.c_str(), tables.get(), song.out()));
    Buffer ids;
    size_t len = 0;
    check(mmtc_encode(song.get(), variant, vocab.get(),
                      reinterpret_cast<int32_t**>(&ids.ptr), &len));
    check(mmtc_token_list_append(list.get(), static_cast<int32_t*>(ids.ptr), len));
  }
  check(mmtc_token_file_write(out_path.c_str(), vocab.get(), list.get()));
  std::cout << "encoded " << inputs.size() << " song(s) -> " << out_path << "\n";
  return 0;
}

int cmd_decode(const std::string& variant_name, const std::string& tables_path,
               const std::string& in_path, const std::string& out_dir) {
  const mmtc_variant variant = parse_variant(variant_name);
  TablesH tables;
  load_tables(tables_path, tables);
  VocabH vocab;
  check(mmtc_vocab_for_variant(variant, vocab.out()));
  TokenListH list;
  uint64_t fingerprint = 0;
  check(mmtc_token_file_read(in_path.c_str(), list.out(), &fingerprint));
  if (fingerprint != mmtc_vocab_fingerprint(vocab.get())) {
    die("token file vocabulary fingerprint does not match variant " + variant_name);
  }
  fs::create_directories(out_dir);
  const size_t n = mmtc_token_list_size(list.get());
  for (size_t i = 0; i < n; ++i) {
    const int32_t* ids = nullptr;
    size_t len = 0;
    check(mmtc_token_list_get(list.get(), i, &ids, &len));
    SongH song;
    check(mmtc_decode(ids, len, variant, vocab.get(), tables.get(), song.out()));
    char name[32];
    std::snprintf(name, sizeof(name), "seq_%04zu.json", i);
    check(mmtc_song_save_json(song.get(), tables.get(), (fs::path(out_dir) / name).c_str()));
  }
  std::cout << "decoded " << n << " sequence(s) -> " << out_dir << "\n";
  return 0;
}

int cmd_stats(const std::string& in_dir, const std::string& subset_name,
              const std::string& tables_path) {
  TablesH tables;
  load_tables(tables_path, tables);
  CorpusH corpus;
  mmtc_load_report report{};
  check(mmtc_corpus_load(in_dir.c_str(), tables.get(), &report, corpus.out()));
  CorpusH filtered;
  check(mmtc_corpus_filter(corpus.get(), parse_subset(subset_name), filtered.out()));

  Buffer gid, gcount, iid, icount;
  size_t ng = 0, ni = 0;
  check(mmtc_corpus_stats(filtered.get(), reinterpret_cast<int32_t**>(&gid.ptr),
                          reinterpret_cast<uint64_t**>(&gcount.ptr), &ng,
                          reinterpret_cast<int32_t**>(&iid.ptr),
                          reinterpret_cast<uint64_t**>(&icount.ptr), &ni));
  std::cout << "# subset " << subset_name << " songs " << mmtc_corpus_size(filtered.get())
            << " (of " << mmtc_corpus_size(corpus.get()) << "), skipped_tracks "
            << report.skipped_tracks << "\n";
  std::cout << "genre\tcount\n";
  for (size_t i = 0; i < ng; ++i) {
    const int32_t id = static_cast<int32_t*>(gid.ptr)[i];
    std::cout << mmtc_tables_genre_name(tables.get(), id) << "\t"
              << static_cast<uint64_t*>(gcount.ptr)[i] << "\n";
  }
  std::cout << "instrument\tcount\n";
  for (size_t i = 0; i < ni; ++i) {
    const int32_t id = static_cast<int32_t*>(iid.ptr)[i];
    std::cout << mmtc_tables_instrument_name(tables.get(), id) << "\t"
              << static_cast<uint64_t*>(icount.ptr)[i] << "\n";
  }
  return 0;
}

int cmd_split(const std::string& in_dir, uint64_t seed, const std::string& out_dir,
              const std::string& tables_path) {
  TablesH tables;
  load_tables(tables_path, tables);
  CorpusH corpus;
  check(mmtc_corpus_load(in_dir.c_str(), tables.get(), nullptr, corpus.out()));
  const size_t n = mmtc_corpus_size(corpus.get());
  std::vector<uint8_t> split(n);
  check(mmtc_corpus_split(corpus.get(), seed, split.data(), n));
  fs::create_directories(out_dir);
  std::ofstream parts[3] = {std::ofstream(fs::path(out_dir) / "train.txt"),
                            std::ofstream(fs::path(out_dir) / "valid.txt"),
                            std::ofstream(fs::path(out_dir) / "test.txt")};
  size_t counts[3] = {0, 0, 0};
  for (size_t i = 0; i < n; ++i) {
    parts[split[i]] << mmtc_corpus_id(corpus.get(), i) << "\n";
    ++counts[split[i]];
  }
  std::ofstream cfg(fs::path(out_dir) / "effective.cfg");
  cfg << "seed = " << seed << "\n";
  std::cout << "train " << counts[0] << " valid " << counts[1] << " test " << counts[2]
            << " -> " << out_dir << "\n";
  return 0;
}

int run_training(mmtc_model* model, const mmtc_corpus* corpus, mmtc_variant variant,
                 const mmtc_vocab* vocab, const RunConfig& config, double lr0,
                 uint64_t seed, const std::string& out_dir, const std::string& extra_cfg) {
  TokenListH train, valid;
  tokenized_splits(corpus, variant, vocab, config.max_len, seed, train, valid);
  if (mmtc_token_list_size(train.get()) == 0) die("training split is empty");

  fs::create_directories(out_dir);
  write_effective_config(out_dir, config, extra_cfg);
  check(mmtc_vocab_save(vocab, (fs::path(out_dir) / "vocab.txt").c_str()));

  TrainLogSink sink;
  sink.file.open(fs::path(out_dir) / "train_log.tsv");
  sink.file << "step\tlr\ttrain_loss\tvalid_loss\n";

  mmtc_train_options options{};
  options.beta1 = config.beta1;
  options.beta2 = config.beta2;
  options.weight_decay = config.weight_decay;
  options.lr0 = lr0;
  options.decay_steps = config.decay_steps;
  options.steps = config.steps;
  options.batch_size = config.batch_size;
  options.validate_every = config.validate_every;
  options.shuffle_seed = seed;
  check(mmtc_train(model, train.get(),
                   mmtc_token_list_size(valid.get()) > 0 ? valid.get() : nullptr, &options,
                   TrainLogSink::callback, &sink));
  check(mmtc_model_save(model, (fs::path(out_dir) / "ckpt.bin").c_str()));
  std::cout << "saved checkpoint after " << mmtc_model_step(model) << " steps -> "
            << (fs::path(out_dir) / "ckpt.bin").string() << "\n";
  return 0;
}

int cmd_pretrain(const std::string& corpus_dir, const std::string& out_dir, uint64_t seed,
                 const RunConfig& config, const std::string& tables_path) {
  TablesH tables;
  load_tables(tables_path, tables);
  CorpusH corpus;
  check(mmtc_corpus_load(corpus_dir.c_str(), tables.get(), nullptr, corpus.out()));
  VocabH vocab;
  check(mmtc_vocab_for_variant(MMTC_VARIANT_UNCOND, vocab.out()));

  mmtc_model_config mc{config.dim, config.heads, config.layers, config.max_len, seed};
  ModelH model;
  check(mmtc_model_init(&mc, vocab.get(), model.out()));
  const std::string extra = "seed = " + std::to_string(seed) + "\ncommand = pretrain\n";
  return run_training(model.get(), corpus.get(), MMTC_VARIANT_UNCOND, vocab.get(), config,
                      config.lr0_pretrain, seed, out_dir, extra);
}

int cmd_finetune(const std::string& from_ckpt, const std::string& base_vocab_path,
                 const std::string& variant_name, const std::string& corpus_dir,
                 const std::string& out_dir, uint64_t seed, const RunConfig& config,
                 const std::string& tables_path) {
  const mmtc_variant variant = parse_variant(variant_name);
  if (variant == MMTC_VARIANT_UNCOND) die("finetune needs a conditioned variant");
  TablesH tables;
  load_tables(tables_path, tables);

  ModelH pretrained;
  check(mmtc_model_load(from_ckpt.c_str(), pretrained.out()));
  const std::string base_path =
      base_vocab_path.empty() ? vocab_sibling(from_ckpt) : base_vocab_path;
  VocabH base_vocab = load_model_vocab(base_path, pretrained.get());
  VocabH target_vocab;
  check(mmtc_vocab_for_variant(variant, target_vocab.out()));

  ModelH model;
  check(mmtc_finetune_init(pretrained.get(), base_vocab.get(), target_vocab.get(), seed,
                           model.out()));

  CorpusH corpus;
  check(mmtc_corpus_load(corpus_dir.c_str(), tables.get(), nullptr, corpus.out()));
  const mmtc_subset subset =
      variant == MMTC_VARIANT_MMT_I ? MMTC_SUBSET_METADATA : MMTC_SUBSET_GENRE;
  CorpusH filtered;
  check(mmtc_corpus_filter(corpus.get(), subset, filtered.out()));
  if (mmtc_corpus_size(filtered.get()) == 0) {
    die("no corpus entries remain after the " +
        std::string(subset == MMTC_SUBSET_GENRE ? "genre" : "metadata") + " filter");
  }

  const std::string extra = "seed = " + std::to_string(seed) + "\ncommand = finetune\n" +
                            "variant = " + variant_name + "\n";
  return run_training(model.get(), filtered.get(), variant, target_vocab.get(), config,
                      config.lr0_finetune, seed, out_dir, extra);
}

int cmd_generate(const std::string& from_ckpt, const std::string& vocab_path,
                 const std::string& variant_name, const std::vector<int32_t>& tags,
                 const std::vector<int32_t>& programs, int count, uint64_t seed,
                 bool no_enforce, const std::string& out_dir, const RunConfig& config,
                 const std::string& tables_path) {
  const mmtc_variant variant = parse_variant(variant_name);
  TablesH tables;
  load_tables(tables_path, tables);
  ModelH model;
  check(mmtc_model_load(from_ckpt.c_str(), model.out()));
  const std::string vpath = vocab_path.empty() ? vocab_sibling(from_ckpt) : vocab_path;
  VocabH vocab = load_model_vocab(vpath, model.get());

  fs::create_directories(out_dir);
  std::string extra = "seed = " + std::to_string(seed) + "\ncommand = generate\n" +
                      "variant = " + variant_name + "\nn = " + std::to_string(count) +
                      "\nenforce_condition = " + (no_enforce ? "0" : "1") + "\n";
  write_effective_config(out_dir, config, extra);

  mmtc_generation_condition condition{};
  condition.variant = variant;
  condition.tags = tags.data();
  condition.num_tags = tags.size();
  condition.programs = programs.data();
  condition.num_programs = programs.size();
  condition.enforce_condition = no_enforce ? 0 : 1;

  TokenListH list;
  check(mmtc_token_list_new(list.out()));
  for (int i = 0; i < count; ++i) {
    mmtc_sampling_config sampling{config.temperature, config.top_k, config.max_tokens,
                                  seed + static_cast<uint64_t>(i)};
    Buffer ids;
    size_t len = 0;
    check(mmtc_generate(model.get(), vocab.get(), &condition, &sampling,
                        reinterpret_cast<int32_t**>(&ids.ptr), &len));
    check(mmtc_token_list_append(list.get(), static_cast<int32_t*>(ids.ptr), len));
    SongH song;
    check(mmtc_decode(static_cast<int32_t*>(ids.ptr), len, variant, vocab.get(),
                      tables.get(), song.out()));
    check(mmtc_song_normalize(song.get(), nullptr, nullptr));
    char name[32];
    std::snprintf(name, sizeof(name), "song_%03d.json", i);
    check(mmtc_song_save_json(song.get(), tables.get(), (fs::path(out_dir) / name).c_str()));
  }
  check(mmtc_token_file_write((fs::path(out_dir) / "tokens.txt").c_str(), vocab.get(),
                              list.get()));
  std::cout << "generated " << count << " sequence(s) -> " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& in_dir, const std::string& tables_path) {
  TablesH tables;
  load_tables(tables_path, tables);
  CorpusH corpus;
  check(mmtc_corpus_load(in_dir.c_str(), tables.get(), nullptr, corpus.out()));
  const size_t n = mmtc_corpus_size(corpus.get());

  struct Row {
    const char* name;
    mmtc_status (*fn)(const mmtc_song*, double*);
    std::vector<double> values;
  };
  Row rows[3] = {{"pitch_class_entropy", mmtc_metric_pitch_class_entropy, {}},
                 {"scale_consistency", mmtc_metric_scale_consistency, {}},
                 {"groove_consistency", mmtc_metric_groove_consistency, {}}};
  for (size_t i = 0; i < n; ++i) {
    for (auto& row : rows) {
      double value = 0.0;
      if (row.fn(mmtc_corpus_song(corpus.get(), i), &value) == MMTC_OK) {
        row.values.push_back(value);
      }
    }
  }
  std::cout << "metric\tmean\tci95\tn\n";
  for (auto& row : rows) {
    double mean = 0.0, ci95 = 0.0;
    check(mmtc_metric_aggregate(row.values.data(), row.values.size(), &mean, &ci95));
    char line[160];
    std::snprintf(line, sizeof(line), "%s\t%.6f\t%.6f\t%zu", row.name, mean, ci95,
                  row.values.size());
    std::cout << line << "\n";
  }
  return 0;
}

int cmd_tables(const std::string& out_path) {
  TablesH tables;
  check(mmtc_tables_builtin(tables.out()));
  check(mmtc_tables_save(tables.get(), out_path.c_str()));
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmtc: controllable event-token music modeling"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string tables_path;
  app.add_option("--tables", tables_path, "canonical tables JSON (default: builtin)");

  RunConfig config;
  std::string config_path;
  // Flag overrides; only applied when given.
  double opt_lr0 = 0.0;
  int64_t opt_steps = 0, opt_decay = 0;
  int opt_batch = 0, opt_dim = 0, opt_heads = 0, opt_layers = 0, opt_validate = 0;

  auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value preset file");
    cmd->add_option("--steps", opt_steps, "training steps");
    cmd->add_option("--batch-size", opt_batch, "sequences per batch");
    cmd->add_option("--lr0", opt_lr0, "initial learning rate");
    cmd->add_option("--decay-steps", opt_decay, "linear decay horizon");
    cmd->add_option("--dim", opt_dim, "model dimension");
    cmd->add_option("--heads", opt_heads, "attention heads");
    cmd->add_option("--layers", opt_layers, "transformer layers");
    cmd->add_option("--validate-every", opt_validate, "validation interval");
  };

  // encode
  auto* encode = app.add_subcommand("encode", "songs -> token file");
  std::string variant_name = "uncond", out_path = "tokens.txt";
  std::vector<std::string> inputs;
  encode->add_option("--variant", variant_name, "uncond|mmt-i|mmt-g|mmt-gi")->required();
  encode->add_option("--out", out_path, "output token file")->required();
  encode->add_option("inputs", inputs, "song JSON files")->required();

  // decode
  auto* decode = app.add_subcommand("decode", "token file -> songs");
  std::string in_path, out_dir;
  decode->add_option("--variant", variant_name, "uncond|mmt-i|mmt-g|mmt-gi")->required();
  decode->add_option("--in", in_path, "token file")->required();
  decode->add_option("--out", out_dir, "output directory")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "corpus frequency tables");
  std::string subset_name = "full";
  stats->add_option("--in", in_path, "corpus directory")->required();
  stats->add_option("--subset", subset_name, "full|metadata|genre");

  // split
  auto* split = app.add_subcommand("split", "deterministic 90/5/5 id lists");
  uint64_t seed = 0;
  split->add_option("--in", in_path, "corpus directory")->required();
  split->add_option("--seed", seed, "split seed")->required();
  split->add_option("--out", out_dir, "output directory")->required();

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "train the unconditional model");
  pretrain->add_option("--corpus", in_path, "corpus directory")->required();
  pretrain->add_option("--out", out_dir, "output directory")->required();
  pretrain->add_option("--seed", seed, "init/shuffle/split seed")->required();
  add_train_flags(pretrain);

  // finetune
  auto* finetune = app.add_subcommand("finetune", "extend a pretrained model with controls");
  std::string from_ckpt, base_vocab_path;
  finetune->add_option("--from", from_ckpt, "pretrained checkpoint")->required();
  finetune->add_option("--base-vocab", base_vocab_path,
                       "pretrained vocabulary (default: vocab.txt next to --from)");
  finetune->add_option("--variant", variant_name, "mmt-i|mmt-g|mmt-gi")->required();
  finetune->add_option("--corpus", in_path, "corpus directory")->required();
  finetune->add_option("--out", out_dir, "output directory")->required();
  finetune->add_option("--seed", seed, "init/shuffle/split seed")->required();
  add_train_flags(finetune);

  // generate
  auto* generate = app.add_subcommand("generate", "grammar-masked conditional sampling");
  std::vector<int32_t> tags, programs;
  int gen_count = 1;
  bool no_enforce = false;
  std::string vocab_path;
  generate->add_option("--from", from_ckpt, "checkpoint")->required();
  generate->add_option("--vocab", vocab_path,
                       "vocabulary file (default: vocab.txt next to --from)");
  generate->add_option("--variant", variant_name, "uncond|mmt-i|mmt-g|mmt-gi")->required();
  generate->add_option("--tags", tags, "genre tag ids")->delimiter(',');
  generate->add_option("--programs", programs, "instrument ids")->delimiter(',');
  generate->add_option("--n", gen_count, "number of samples");
  generate->add_option("--seed", seed, "sampling seed (sample i uses seed+i)")->required();
  generate->add_flag("--no-enforce", no_enforce, "do not mask to the conditioned programs");
  generate->add_option("--out", out_dir, "output directory")->required();
  generate->add_option("--config", config_path, "key=value preset file");
  double opt_temperature = 0.0;
  int opt_top_k = 0, opt_max_tokens = 0;
  generate->add_option("--temperature", opt_temperature, "softmax temperature");
  generate->add_option("--top-k", opt_top_k, "top-k cutoff");
  generate->add_option("--max-tokens", opt_max_tokens, "total length cap");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "objective metrics over a song directory");
  evaluate->add_option("--in", in_path, "directory of song JSON files")->required();

  // tables
  auto* tables_cmd = app.add_subcommand("tables", "export the builtin canonical tables");
  tables_cmd->add_option("--out", out_path, "output JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) config.load(config_path);
  } catch (const std::exception& e) {
    die(e.what());
  }
  // Flag overrides beat the preset file.
  auto given = [&](CLI::App* cmd, const std::string& flag) {
    return cmd->count(flag) > 0;
  };
  for (CLI::App* cmd : {pretrain, finetune}) {
    if (!cmd->parsed()) continue;
    if (given(cmd, "--steps")) config.steps = opt_steps;
    if (given(cmd, "--batch-size")) config.batch_size = opt_batch;
    if (given(cmd, "--decay-steps")) config.decay_steps = opt_decay;
    if (given(cmd, "--dim")) config.dim = opt_dim;
    if (given(cmd, "--heads")) config.heads = opt_heads;
    if (given(cmd, "--layers")) config.layers = opt_layers;
    if (given(cmd, "--validate-every")) config.validate_every = opt_validate;
    if (given(cmd, "--lr0")) {
      config.lr0_pretrain = opt_lr0;
      config.lr0_finetune = opt_lr0;
    }
  }
  if (generate->parsed()) {
    if (given(generate, "--temperature")) config.temperature = opt_temperature;
    if (given(generate, "--top-k")) config.top_k = opt_top_k;
    if (given(generate, "--max-tokens")) config.max_tokens = opt_max_tokens;
  }

  if (encode->parsed()) return cmd_encode(variant_name, tables_path, out_path, inputs);
  if (decode->parsed()) return cmd_decode(variant_name, tables_path, in_path, out_dir);
  if (stats->parsed()) return cmd_stats(in_path, subset_name, tables_path);
  if (split->parsed()) return cmd_split(in_path, seed, out_dir, tables_path);
  if (pretrain->parsed()) return cmd_pretrain(in_path, out_dir, seed, config, tables_path);
  if (finetune->parsed()) {
    return cmd_finetune(from_ckpt, base_vocab_path, variant_name, in_path, out_dir, seed,
                        config, tables_path);
  }
  if (generate->parsed()) {
    return cmd_generate(from_ckpt, vocab_path, variant_name, tags, programs, gen_count,
                        seed, no_enforce, out_dir, config, tables_path);
  }
  if (evaluate->parsed()) return cmd_evaluate(in_path, tables_path);
  if (tables_cmd->parsed()) return cmd_tables(out_path);
  return 2;
}
