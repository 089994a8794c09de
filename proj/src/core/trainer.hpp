#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/vocabulary.hpp"

namespace mmtc {

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double eps = 1e-8;
  double lr0 = 0.0005;          // 0.0001 for finetuning
  int64_t decay_steps = 100000; // linear decay horizon
};

// Linear decay from lr0 to 0.1*lr0 over decay_steps, constant afterwards.
double lr_at(int64_t step, const OptimizerConfig& opt);

struct Batch {
  std::vector<int32_t> ids; // rows*cols, pad id 0
  int rows = 0, cols = 0;
};

// Right-pads sequences to the longest one in the batch.
Batch make_batch(const std::vector<const std::vector<int32_t>*>& seqs);

// Keeps the condition prefix (through start-of-notes) plus as many complete
// 5-token note groups as fit; the end-of-song token is dropped when the
// sequence is cut.
std::vector<int32_t> truncate_sequence(const std::vector<int32_t>& ids, size_t max_len,
                                       const Vocabulary& vocab);

// One AdamW update with bias-corrected moments and decoupled weight decay on
// the matrix weights (embeddings, biases and norm parameters are not
// decayed). Uses lr_at(ckpt.step) and then increments the step counter.
void adamw_update(ModelCheckpoint& ckpt, const AlignedVec<float>& grads,
                  const OptimizerConfig& opt);

// Computes loss and gradients on the batch, then applies adamw_update.
// Fails on a non-finite loss without touching the parameters.
double train_step(ModelCheckpoint& ckpt, const Batch& batch, const OptimizerConfig& opt);

// Token-weighted mean validation loss over fixed-order batches.
double validation_loss(const ModelCheckpoint& ckpt,
                       const std::vector<std::vector<int32_t>>& seqs, int batch_size);

struct TrainRunConfig {
  OptimizerConfig opt;
  int64_t steps = 1000;
  int batch_size = 8;
  int validate_every = 500; // 0 disables validation rows
  uint64_t shuffle_seed = 0;
};

struct TrainLogRow {
  int64_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> valid_loss;
};

using TrainLogFn = std::function<void(const TrainLogRow&)>;

// Deterministic training loop: epoch-wise seeded shuffles of the sequence
// order, batches padded to their own maxima, a log row at step 1, every
// validate_every steps, and at the end.
void train_run(ModelCheckpoint& ckpt, const std::vector<std::vector<int32_t>>& train_seqs,
               const std::vector<std::vector<int32_t>>& valid_seqs,
               const TrainRunConfig& cfg, const TrainLogFn& log = nullptr);

// Vocabulary-extension initialization: embedding and output-projection slots
// for events shared between the vocabularies copy the pretrained values
// exactly; slots for new events are drawn from normal(0, 0.02) with the given
// seed. All other parameters are copied; optimizer state and step reset.
ModelCheckpoint finetune_init(const ModelCheckpoint& pretrained, const Vocabulary& base_vocab,
                              const Vocabulary& target_vocab, uint64_t seed);

} // namespace mmtc
