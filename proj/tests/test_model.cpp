#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/checkpoint.hpp"
#include "core/error.hpp"
#include "core/model.hpp"

using namespace mmtc;

namespace {

std::vector<int32_t> random_ids(Rng& rng, int rows, int len, int vocab, bool allow_pad = false) {
  std::vector<int32_t> ids(static_cast<size_t>(rows) * len);
  for (auto& id : ids) {
    id = static_cast<int32_t>(allow_pad ? rng.next_below(vocab)
                                        : 1 + rng.next_below(vocab - 1));
  }
  return ids;
}

} // namespace

TEST_CASE("init is deterministic per seed") {
  ModelConfig cfg{.dim = 16, .heads = 4, .layers = 2, .max_len = 32, .vocab_size = 50, .seed = 9};
  const auto a = TransformerF::init(cfg);
  const auto b = TransformerF::init(cfg);
  CHECK(a.data() == b.data());
  cfg.seed = 10;
  const auto c = TransformerF::init(cfg);
  CHECK(a.data() != c.data());
}

TEST_CASE("init rejects dim not divisible by heads") {
  ModelConfig cfg{.dim = 6, .heads = 4, .layers = 1, .max_len = 8, .vocab_size = 10, .seed = 0};
  CHECK_THROWS_AS(TransformerF::init(cfg), Error);
}

TEST_CASE("embedding and projection shapes follow the config") {
  ModelConfig cfg{.dim = 128, .heads = 4, .layers = 4, .max_len = 1024, .vocab_size = 486,
                  .seed = 0};
  const TransformerF model(cfg);
  const auto& specs = model.layout().specs;
  CHECK(specs[model.idx().tok_emb].rows == 486);
  CHECK(specs[model.idx().tok_emb].cols == 128);
  CHECK(specs[model.idx().pos_emb].rows == 1024);
  CHECK(specs[model.idx().out_proj].rows == 128);
  CHECK(specs[model.idx().out_proj].cols == 486);
  // Biases and norms are excluded from weight decay, matrices participate.
  for (const auto& spec : specs) {
    if (spec.rows == 1 || spec.name == "tok_emb" || spec.name == "pos_emb") {
      CHECK_FALSE(spec.decay);
    } else {
      CHECK(spec.decay);
    }
  }
}

TEST_CASE("forward is causal to exact equality") {
  ModelConfig cfg{.dim = 32, .heads = 4, .layers = 2, .max_len = 16, .vocab_size = 40, .seed = 3};
  const auto model = TransformerF::init(cfg);
  Rng rng(17);
  const int len = 10;
  auto ids = random_ids(rng, 1, len, cfg.vocab_size);
  const auto before = model.forward(ids, 1, len);
  auto perturbed = ids;
  perturbed[len - 1] = perturbed[len - 1] == 1 ? 2 : 1;
  const auto after = model.forward(perturbed, 1, len);
  for (int t = 0; t + 1 < len; ++t) {
    for (int j = 0; j < cfg.vocab_size; ++j) {
      CHECK(before(t, j) == after(t, j)); // bit-exact
    }
  }
  CHECK(before(len - 1, 0) != after(len - 1, 0));
}

TEST_CASE("single-token forward has finite logits of the right shape") {
  ModelConfig cfg{.dim = 16, .heads = 2, .layers = 1, .max_len = 8, .vocab_size = 12, .seed = 1};
  const auto model = TransformerF::init(cfg);
  const auto logits = model.forward({3}, 1, 1);
  CHECK(logits.rows() == 1);
  CHECK(logits.cols() == 12);
  for (int j = 0; j < 12; ++j) CHECK(std::isfinite(logits(0, j)));
}

TEST_CASE("identical batch rows produce identical logits rows") {
  ModelConfig cfg{.dim = 32, .heads = 4, .layers = 2, .max_len = 16, .vocab_size = 40, .seed = 5};
  const auto model = TransformerF::init(cfg);
  Rng rng(23);
  const int len = 8;
  const auto row = random_ids(rng, 1, len, cfg.vocab_size);
  std::vector<int32_t> batch;
  batch.insert(batch.end(), row.begin(), row.end());
  batch.insert(batch.end(), row.begin(), row.end());
  const auto logits = model.forward(batch, 2, len);
  for (int t = 0; t < len; ++t) {
    for (int j = 0; j < cfg.vocab_size; ++j) {
      CHECK(logits(t, j) == logits(len + t, j));
    }
  }
}

TEST_CASE("forward rejects bad ids and over-long sequences") {
  ModelConfig cfg{.dim = 16, .heads = 2, .layers = 1, .max_len = 4, .vocab_size = 10, .seed = 0};
  const auto model = TransformerF::init(cfg);
  CHECK_THROWS_AS(model.forward({1, 2, 10, 3}, 1, 4), Error);
  CHECK_THROWS_AS(model.forward({1, 2, 3, 4, 5}, 1, 5), Error);
}

TEST_CASE("untrained loss is near ln(vocab)") {
  ModelConfig cfg{.dim = 64, .heads = 4, .layers = 2, .max_len = 64, .vocab_size = 486,
                  .seed = 77};
  const auto model = TransformerF::init(cfg);
  Rng rng(99);
  const auto ids = random_ids(rng, 4, 48, cfg.vocab_size);
  const double loss = model.loss(ids, 4, 48);
  const double uniform = std::log(static_cast<double>(cfg.vocab_size));
  CHECK(std::abs(loss - uniform) / uniform < 0.05);
}

TEST_CASE("loss masks pad targets and rejects pad-only targets") {
  ModelConfig cfg{.dim = 16, .heads = 2, .layers = 1, .max_len = 8, .vocab_size = 10, .seed = 2};
  const auto model = TransformerF::init(cfg);
  // Pad tail: targets at the padded positions must not contribute.
  const std::vector<int32_t> padded = {3, 4, 5, 0, 0, 0};
  const std::vector<int32_t> bare = {3, 4, 5};
  const double full = model.loss(padded, 1, 6);
  const double trimmed = model.loss(bare, 1, 3);
  CHECK(full == doctest::Approx(trimmed).epsilon(1e-6));
  CHECK_THROWS_WITH_AS(model.loss({3, 0, 0, 0}, 1, 4), doctest::Contains("padding"), Error);
}

TEST_CASE("analytic gradients match central finite differences") {
  ModelConfig cfg{.dim = 8, .heads = 2, .layers = 1, .max_len = 16, .vocab_size = 20, .seed = 42};
  auto model = TransformerD::init(cfg);
  Rng rng(4242);
  const int rows = 2, len = 12;
  auto ids = random_ids(rng, rows, len, cfg.vocab_size, true);
  ids[5] = 0; // a pad target inside the stream exercises the loss mask

  AlignedVec<double> grads;
  model.loss(ids, rows, len, &grads);

  double max_rel = 0.0;
  auto& data = model.data();
  for (size_t i = 0; i < data.size(); ++i) {
    const double saved = data[i];
    const double h = 1e-5 * std::max(1.0, std::abs(saved));
    data[i] = saved + h;
    const double plus = model.loss(ids, rows, len);
    data[i] = saved - h;
    const double minus = model.loss(ids, rows, len);
    data[i] = saved;
    const double fd = (plus - minus) / (2.0 * h);
    const double rel =
        std::abs(fd - grads[i]) / std::max({std::abs(fd), std::abs(grads[i]), 1e-4});
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("checkpoint save/load/save is byte-identical") {
  ModelConfig cfg{.dim = 16, .heads = 4, .layers = 2, .max_len = 32, .vocab_size = 50,
                  .seed = 31};
  ModelCheckpoint ckpt = init_checkpoint(cfg, 0xabcdef1234ULL);
  ckpt.step = 7;
  ckpt.opt_m.assign(ckpt.model.layout().total, 0.5f);
  ckpt.opt_v.assign(ckpt.model.layout().total, 0.25f);

  const std::string a = "ckpt_a.bin", b = "ckpt_b.bin";
  save_checkpoint(a, ckpt);
  const ModelCheckpoint loaded = load_checkpoint(a);
  CHECK(loaded.model.config() == ckpt.model.config());
  CHECK(loaded.vocab_fingerprint == ckpt.vocab_fingerprint);
  CHECK(loaded.step == ckpt.step);
  CHECK(loaded.model.data() == ckpt.model.data());
  CHECK(loaded.opt_m == ckpt.opt_m);
  save_checkpoint(b, loaded);

  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK_FALSE(sa.empty());
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST_CASE("incremental decoder tracks the batch forward pass") {
  ModelConfig cfg{.dim = 32, .heads = 4, .layers = 2, .max_len = 32, .vocab_size = 60,
                  .seed = 8};
  const auto model = TransformerF::init(cfg);
  Rng rng(55);
  const int len = 20;
  const auto ids = random_ids(rng, 1, len, cfg.vocab_size);
  const auto full = model.forward(ids, 1, len);

  Decoder<float> decoder(model);
  for (int t = 0; t < len; ++t) {
    const auto logits = decoder.step(ids[t]);
    Eigen::Index full_arg, inc_arg;
    full.row(t).maxCoeff(&full_arg);
    logits.maxCoeff(&inc_arg);
    CHECK(full_arg == inc_arg);
    for (int j = 0; j < cfg.vocab_size; ++j) {
      CHECK(logits[j] == doctest::Approx(full(t, j)).epsilon(1e-4));
    }
  }
}
