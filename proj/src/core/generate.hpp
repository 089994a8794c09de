#pragma once

#include <cstdint>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/codec.hpp"
#include "core/rng.hpp"

namespace mmtc {

struct GenerationCondition {
  Variant variant = Variant::uncond;
  std::vector<int> tags;     // required nonempty for mmt-g / mmt-gi
  std::vector<int> programs; // required nonempty for mmt-i / mmt-gi
  bool enforce_condition = true;
};

struct SamplingConfig {
  double temperature = 1.0;
  int top_k = 20;
  int max_tokens = 1024; // total output length cap, prefix included
  uint64_t seed = 0;
};

// The variant's condition prefix through start-of-notes; lists are
// deduplicated and sorted ascending.
std::vector<Event> build_prefix(const GenerationCondition& cond);

// Top-k sampling at the given temperature over the unmasked entries; masked
// entries get probability exactly zero. top_k == 1 is argmax (lowest id wins
// ties). Fails with "grammar dead end" on an all-false mask.
int sample_token(const std::vector<float>& logits, const std::vector<bool>& mask,
                 const SamplingConfig& cfg, Rng& rng);

// Grammar-masked autoregressive sampling. The output starts with the encoded
// prefix verbatim and always parses under the variant grammar; generation
// stops at end-of-song or at max_tokens.
std::vector<int32_t> generate(const ModelCheckpoint& ckpt, const Vocabulary& vocab,
                              const GenerationCondition& cond, const SamplingConfig& cfg);

} // namespace mmtc
