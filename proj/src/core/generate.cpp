#include "core/generate.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace mmtc {

std::vector<Event> build_prefix(const GenerationCondition& cond) {
  auto cleaned = [](std::vector<int> ids, int upper, const char* what) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (int id : ids) {
      if (id < 0 || id >= upper) {
        fail(ErrorCode::invalid_argument,
             std::string(what) + " id out of range: " + std::to_string(id));
      }
    }
    return ids;
  };

  std::vector<Event> prefix;
  prefix.push_back({EventKind::start_of_song, 0});
  if (variant_has_tags(cond.variant)) {
    if (cond.tags.empty()) {
      fail(ErrorCode::invalid_argument, "missing genre condition for variant " +
                                            std::string(variant_name(cond.variant)));
    }
    prefix.push_back({EventKind::start_of_tags, 0});
    for (int t : cleaned(cond.tags, kNumGenres, "tag")) {
      prefix.push_back({EventKind::tag, t});
    }
  }
  if (variant_has_programs(cond.variant)) {
    if (cond.programs.empty()) {
      fail(ErrorCode::invalid_argument, "missing instrument condition for variant " +
                                            std::string(variant_name(cond.variant)));
    }
    prefix.push_back({EventKind::start_of_program, 0});
    for (int p : cleaned(cond.programs, kNumInstruments, "instrument")) {
      prefix.push_back({EventKind::instrument, p});
    }
  }
  prefix.push_back({EventKind::start_of_notes, 0});
  return prefix;
}

int sample_token(const std::vector<float>& logits, const std::vector<bool>& mask,
                 const SamplingConfig& cfg, Rng& rng) {
  if (logits.size() != mask.size()) {
    fail(ErrorCode::invalid_argument, "logits/mask size mismatch");
  }
  if (cfg.temperature <= 0.0) fail(ErrorCode::invalid_argument, "temperature must be > 0");
  if (cfg.top_k < 1) fail(ErrorCode::invalid_argument, "top_k must be >= 1");

  std::vector<std::pair<float, int>> survivors; // (logit, id)
  for (size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) survivors.push_back({logits[i], static_cast<int>(i)});
  }
  if (survivors.empty()) fail(ErrorCode::internal, "grammar dead end");

  // Rank by logit descending, lowest id first on ties.
  const size_t keep = std::min<size_t>(cfg.top_k, survivors.size());
  std::partial_sort(survivors.begin(), survivors.begin() + keep, survivors.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  survivors.resize(keep);
  if (keep == 1 || cfg.top_k == 1) return survivors[0].second;

  const double zmax = survivors[0].first;
  std::vector<double> weights(keep);
  double total = 0.0;
  for (size_t i = 0; i < keep; ++i) {
    weights[i] = std::exp((static_cast<double>(survivors[i].first) - zmax) / cfg.temperature);
    total += weights[i];
  }
  const double draw = rng.next_double() * total;
  double cumulative = 0.0;
  for (size_t i = 0; i < keep; ++i) {
    cumulative += weights[i];
    if (draw < cumulative) return survivors[i].second;
  }
  return survivors[keep - 1].second;
}

std::vector<int32_t> generate(const ModelCheckpoint& ckpt, const Vocabulary& vocab,
                              const GenerationCondition& cond, const SamplingConfig& cfg) {
  if (ckpt.vocab_fingerprint != vocab.fingerprint()) {
    fail(ErrorCode::state, "checkpoint/vocabulary mismatch");
  }
  if (static_cast<size_t>(ckpt.model.config().vocab_size) != vocab.size()) {
    fail(ErrorCode::state, "checkpoint/vocabulary mismatch");
  }

  const auto prefix_events = build_prefix(cond);
  std::vector<int32_t> out;
  out.reserve(cfg.max_tokens);
  GrammarState state = initial_state();
  for (const Event& e : prefix_events) {
    const AdvanceResult step = advance(state, e, cond.variant);
    if (!step.accepted) fail(ErrorCode::internal, "condition prefix rejected by grammar");
    state = step.next;
    const int id = vocab.id_of(e);
    if (id < 0) fail(ErrorCode::state, "condition event not in vocabulary: " + event_to_string(e));
    out.push_back(id);
  }
  const int effective_max = std::min(cfg.max_tokens, ckpt.model.config().max_len);
  if (static_cast<int>(out.size()) > effective_max) {
    fail(ErrorCode::invalid_argument, "max_tokens smaller than the condition prefix");
  }

  const int32_t eos_id = vocab.id_of({EventKind::end_of_song, 0});
  Rng rng(cfg.seed);
  Decoder<float> decoder(ckpt.model);
  Eigen::Matrix<float, 1, Eigen::Dynamic> logits;
  for (int32_t id : out) logits = decoder.step(id);

  while (static_cast<int>(out.size()) < effective_max) {
    const auto mask = allowed_mask(state, vocab, cond.variant, cond.enforce_condition);
    std::vector<float> raw(logits.data(), logits.data() + logits.size());
    const int next = sample_token(raw, mask, cfg, rng);
    out.push_back(next);
    const AdvanceResult step = advance(state, vocab.event_of(next), cond.variant);
    if (!step.accepted) fail(ErrorCode::internal, "sampled token rejected by grammar");
    state = step.next;
    if (next == eos_id) break;
    if (static_cast<int>(out.size()) >= effective_max) break;
    logits = decoder.step(next);
  }
  return out;
}

} // namespace mmtc
