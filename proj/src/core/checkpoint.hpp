#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/model.hpp"

namespace mmtc {

// Model parameters plus everything needed to resume training: AdamW moments,
// step counter, and the fingerprint of the vocabulary the ids refer to.
struct ModelCheckpoint {
  TransformerF model;
  uint64_t vocab_fingerprint = 0;
  int64_t step = 0;
  AlignedVec<float> opt_m, opt_v; // empty until the first optimizer step

  explicit ModelCheckpoint(const ModelConfig& config) : model(config) {}
  ModelCheckpoint(TransformerF m, uint64_t fingerprint)
      : model(std::move(m)), vocab_fingerprint(fingerprint) {}
};

ModelCheckpoint init_checkpoint(const ModelConfig& config, uint64_t vocab_fingerprint);

// Versioned binary format: magic, version, config, fingerprint, step, then
// flat little-endian float32 arrays (parameters, then optimizer moments when
// present) in layout order. Save/load round trips are byte-identical.
void save_checkpoint(const std::string& path, const ModelCheckpoint& ckpt);
ModelCheckpoint load_checkpoint(const std::string& path);

} // namespace mmtc
