#include "core/model.hpp"

namespace mmtc {

void validate_config(const ModelConfig& config) {
  if (config.dim <= 0 || config.heads <= 0 || config.layers <= 0) {
    fail(ErrorCode::invalid_argument, "model dimensions must be positive");
  }
  if (config.dim % config.heads != 0) {
    fail(ErrorCode::invalid_argument,
         "dim " + std::to_string(config.dim) + " not divisible by heads " +
             std::to_string(config.heads));
  }
  if (config.max_len < 2) {
    fail(ErrorCode::invalid_argument, "max_len must be at least 2");
  }
  if (config.vocab_size < 2) {
    fail(ErrorCode::invalid_argument, "vocab_size must be at least 2");
  }
}

ParamLayout ParamLayout::build(const ModelConfig& config) {
  validate_config(config);
  ParamLayout layout;
  const int d = config.dim;
  const int f = 4 * config.dim;
  const int v = config.vocab_size;

  auto add = [&layout](const std::string& name, int rows, int cols, bool decay,
                       ParamInit init) {
    ParamSpec spec{name, layout.total, rows, cols, decay, init};
    layout.total += spec.count();
    layout.specs.push_back(std::move(spec));
  };

  // Embeddings are randomly initialized but excluded from weight decay.
  add("tok_emb", v, d, false, ParamInit::normal);
  add("pos_emb", config.max_len, d, false, ParamInit::normal);
  for (int l = 0; l < config.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "ln1.gain", 1, d, false, ParamInit::ones);
    add(p + "ln1.bias", 1, d, false, ParamInit::zeros);
    add(p + "attn.wq", d, d, true, ParamInit::normal);
    add(p + "attn.bq", 1, d, false, ParamInit::zeros);
    add(p + "attn.wk", d, d, true, ParamInit::normal);
    add(p + "attn.bk", 1, d, false, ParamInit::zeros);
    add(p + "attn.wv", d, d, true, ParamInit::normal);
    add(p + "attn.bv", 1, d, false, ParamInit::zeros);
    add(p + "attn.wo", d, d, true, ParamInit::normal);
    add(p + "attn.bo", 1, d, false, ParamInit::zeros);
    add(p + "ln2.gain", 1, d, false, ParamInit::ones);
    add(p + "ln2.bias", 1, d, false, ParamInit::zeros);
    add(p + "ff.w1", d, f, true, ParamInit::normal);
    add(p + "ff.b1", 1, f, false, ParamInit::zeros);
    add(p + "ff.w2", f, d, true, ParamInit::normal);
    add(p + "ff.b2", 1, d, false, ParamInit::zeros);
  }
  add("ln_f.gain", 1, d, false, ParamInit::ones);
  add("ln_f.bias", 1, d, false, ParamInit::zeros);
  add("out_proj", d, v, true, ParamInit::normal);
  return layout;
}

int ParamLayout::index_of(const std::string& name) const {
  for (size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].name == name) return static_cast<int>(i);
  }
  fail(ErrorCode::internal, "unknown parameter: " + name);
}

ParamIdx ParamIdx::resolve(const ParamLayout& layout, int num_layers) {
  ParamIdx idx{};
  idx.tok_emb = layout.index_of("tok_emb");
  idx.pos_emb = layout.index_of("pos_emb");
  idx.ln_f_g = layout.index_of("ln_f.gain");
  idx.ln_f_b = layout.index_of("ln_f.bias");
  idx.out_proj = layout.index_of("out_proj");
  for (int l = 0; l < num_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    idx.layers.push_back({layout.index_of(p + "ln1.gain"), layout.index_of(p + "ln1.bias"),
                          layout.index_of(p + "attn.wq"), layout.index_of(p + "attn.bq"),
                          layout.index_of(p + "attn.wk"), layout.index_of(p + "attn.bk"),
                          layout.index_of(p + "attn.wv"), layout.index_of(p + "attn.bv"),
                          layout.index_of(p + "attn.wo"), layout.index_of(p + "attn.bo"),
                          layout.index_of(p + "ln2.gain"), layout.index_of(p + "ln2.bias"),
                          layout.index_of(p + "ff.w1"), layout.index_of(p + "ff.b1"),
                          layout.index_of(p + "ff.w2"), layout.index_of(p + "ff.b2")});
  }
  return idx;
}

} // namespace mmtc
