#include "core/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "core/codec.hpp"
#include "core/rng.hpp"

namespace mmtc {

double lr_at(int64_t step, const OptimizerConfig& opt) {
  if (step < 0) fail(ErrorCode::invalid_argument, "negative step");
  if (opt.decay_steps <= 0 || step >= opt.decay_steps) return 0.1 * opt.lr0;
  const double frac = static_cast<double>(step) / static_cast<double>(opt.decay_steps);
  return opt.lr0 * (1.0 - 0.9 * frac);
}

Batch make_batch(const std::vector<const std::vector<int32_t>*>& seqs) {
  Batch batch;
  batch.rows = static_cast<int>(seqs.size());
  size_t longest = 0;
  for (const auto* s : seqs) longest = std::max(longest, s->size());
  batch.cols = static_cast<int>(longest);
  batch.ids.assign(static_cast<size_t>(batch.rows) * batch.cols, 0);
  for (int r = 0; r < batch.rows; ++r) {
    std::copy(seqs[r]->begin(), seqs[r]->end(),
              batch.ids.begin() + static_cast<size_t>(r) * batch.cols);
  }
  return batch;
}

std::vector<int32_t> truncate_sequence(const std::vector<int32_t>& ids, size_t max_len,
                                       const Vocabulary& vocab) {
  if (ids.size() <= max_len) return ids;
  const int son_id = vocab.id_of({EventKind::start_of_notes, 0});
  size_t prefix_len = 0;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == son_id) {
      prefix_len = i + 1;
      break;
    }
  }
  if (prefix_len == 0 || prefix_len > max_len) {
    fail(ErrorCode::invalid_argument,
         "sequence prefix does not fit into max_len " + std::to_string(max_len));
  }
  const size_t groups = (max_len - prefix_len) / 5;
  const size_t body = std::min(ids.size() - prefix_len, groups * 5);
  std::vector<int32_t> out(ids.begin(), ids.begin() + prefix_len + body);
  return out;
}

void adamw_update(ModelCheckpoint& ckpt, const AlignedVec<float>& grads,
                  const OptimizerConfig& opt) {
  auto& model = ckpt.model;
  const size_t total = model.layout().total;
  if (grads.size() != total) {
    fail(ErrorCode::invalid_argument, "gradient size does not match model layout");
  }
  if (ckpt.opt_m.empty()) {
    ckpt.opt_m.assign(total, 0.0f);
    ckpt.opt_v.assign(total, 0.0f);
  }
  if (ckpt.opt_m.size() != total || ckpt.opt_v.size() != total) {
    fail(ErrorCode::state, "optimizer state does not match model layout");
  }

  const double lr = lr_at(ckpt.step, opt);
  const double t = static_cast<double>(ckpt.step + 1);
  const double bias1 = 1.0 - std::pow(opt.beta1, t);
  const double bias2 = 1.0 - std::pow(opt.beta2, t);

  float* params = model.data().data();
  for (const auto& spec : model.layout().specs) {
    const double decay = spec.decay ? opt.weight_decay : 0.0;
    for (size_t i = spec.offset; i < spec.offset + spec.count(); ++i) {
      const double g = grads[i];
      const double m = opt.beta1 * ckpt.opt_m[i] + (1.0 - opt.beta1) * g;
      const double v = opt.beta2 * ckpt.opt_v[i] + (1.0 - opt.beta2) * g * g;
      ckpt.opt_m[i] = static_cast<float>(m);
      ckpt.opt_v[i] = static_cast<float>(v);
      const double mhat = m / bias1;
      const double vhat = v / bias2;
      const double p = params[i];
      params[i] =
          static_cast<float>(p - lr * (mhat / (std::sqrt(vhat) + opt.eps) + decay * p));
    }
  }
  ++ckpt.step;
}

double train_step(ModelCheckpoint& ckpt, const Batch& batch, const OptimizerConfig& opt) {
  AlignedVec<float> grads;
  const double loss = ckpt.model.loss(batch.ids, batch.rows, batch.cols, &grads);
  if (!std::isfinite(loss)) {
    fail(ErrorCode::state, "non-finite loss at step " + std::to_string(ckpt.step));
  }
  adamw_update(ckpt, grads, opt);
  return loss;
}

double validation_loss(const ModelCheckpoint& ckpt,
                       const std::vector<std::vector<int32_t>>& seqs, int batch_size) {
  if (seqs.empty()) fail(ErrorCode::invalid_argument, "empty validation set");
  double total_loss = 0.0;
  size_t total_targets = 0;
  for (size_t begin = 0; begin < seqs.size(); begin += batch_size) {
    std::vector<const std::vector<int32_t>*> slice;
    for (size_t i = begin; i < std::min(seqs.size(), begin + batch_size); ++i) {
      slice.push_back(&seqs[i]);
    }
    const Batch batch = make_batch(slice);
    size_t targets = 0;
    for (int r = 0; r < batch.rows; ++r) {
      for (int c = 0; c + 1 < batch.cols; ++c) {
        if (batch.ids[static_cast<size_t>(r) * batch.cols + c + 1] != 0) ++targets;
      }
    }
    if (targets == 0) continue;
    total_loss += ckpt.model.loss(batch.ids, batch.rows, batch.cols) *
                  static_cast<double>(targets);
    total_targets += targets;
  }
  if (total_targets == 0) fail(ErrorCode::invalid_argument, "all targets are padding");
  return total_loss / static_cast<double>(total_targets);
}

void train_run(ModelCheckpoint& ckpt, const std::vector<std::vector<int32_t>>& train_seqs,
               const std::vector<std::vector<int32_t>>& valid_seqs,
               const TrainRunConfig& cfg, const TrainLogFn& log) {
  if (train_seqs.empty()) fail(ErrorCode::invalid_argument, "empty training set");
  Rng shuffle_rng(cfg.shuffle_seed);
  std::vector<size_t> order(train_seqs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  size_t cursor = order.size(); // forces a shuffle on the first batch

  const int64_t last_step = ckpt.step + cfg.steps;
  while (ckpt.step < last_step) {
    std::vector<const std::vector<int32_t>*> slice;
    for (int i = 0; i < cfg.batch_size; ++i) {
      if (cursor >= order.size()) {
        for (size_t j = order.size(); j > 1; --j) {
          std::swap(order[j - 1], order[shuffle_rng.next_below(j)]);
        }
        cursor = 0;
      }
      slice.push_back(&train_seqs[order[cursor++]]);
    }
    const double lr = lr_at(ckpt.step, cfg.opt);
    const double loss = train_step(ckpt, make_batch(slice), cfg.opt);
    const bool at_interval =
        cfg.validate_every > 0 && ckpt.step % cfg.validate_every == 0;
    if (log && (ckpt.step == 1 || at_interval || ckpt.step == last_step)) {
      TrainLogRow row{ckpt.step, lr, loss, std::nullopt};
      if (!valid_seqs.empty()) row.valid_loss = validation_loss(ckpt, valid_seqs, cfg.batch_size);
      log(row);
    }
  }
}

ModelCheckpoint finetune_init(const ModelCheckpoint& pretrained, const Vocabulary& base_vocab,
                              const Vocabulary& target_vocab, uint64_t seed) {
  if (pretrained.vocab_fingerprint != base_vocab.fingerprint()) {
    fail(ErrorCode::state, "checkpoint/vocabulary mismatch");
  }
  const SharedIdMap map = extend_vocab(base_vocab, target_vocab);

  ModelConfig cfg = pretrained.model.config();
  cfg.vocab_size = static_cast<int>(target_vocab.size());
  cfg.seed = seed;
  ModelCheckpoint out(cfg);
  out.vocab_fingerprint = target_vocab.fingerprint();
  out.step = 0;

  const auto& src = pretrained.model;
  auto& dst = out.model;
  // Copy everything that is not vocabulary-shaped.
  for (size_t i = 0; i < dst.layout().specs.size(); ++i) {
    const auto& spec = dst.layout().specs[i];
    if (spec.name == "tok_emb" || spec.name == "out_proj") continue;
    dst.param(static_cast<int>(i)) = src.param(spec.name);
  }

  Rng rng(seed);
  auto src_emb = src.param("tok_emb");
  auto dst_emb = dst.param("tok_emb");
  for (size_t id = 0; id < target_vocab.size(); ++id) {
    const int base_id = map.base_id_of_target[id];
    if (base_id >= 0) {
      dst_emb.row(static_cast<Eigen::Index>(id)) = src_emb.row(base_id);
    } else {
      for (int c = 0; c < cfg.dim; ++c) {
        dst_emb(static_cast<Eigen::Index>(id), c) =
            static_cast<float>(kInitStd * rng.next_normal());
      }
    }
  }
  auto src_out = src.param("out_proj");
  auto dst_out = dst.param("out_proj");
  for (size_t id = 0; id < target_vocab.size(); ++id) {
    const int base_id = map.base_id_of_target[id];
    if (base_id >= 0) {
      dst_out.col(static_cast<Eigen::Index>(id)) = src_out.col(base_id);
    } else {
      for (int r = 0; r < cfg.dim; ++r) {
        dst_out(r, static_cast<Eigen::Index>(id)) =
            static_cast<float>(kInitStd * rng.next_normal());
      }
    }
  }
  return out;
}

} // namespace mmtc
