#include "core/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "core/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace mmtc {

namespace {

constexpr char kMagic[8] = {'M', 'M', 'T', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) fail(ErrorCode::parse, path + ": truncated checkpoint");
  return value;
}

void write_floats(std::ofstream& out, const AlignedVec<float>& values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
}

void read_floats(std::ifstream& in, AlignedVec<float>& values, size_t count,
                 const std::string& path) {
  values.resize(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) fail(ErrorCode::parse, path + ": truncated checkpoint");
}

} // namespace

ModelCheckpoint init_checkpoint(const ModelConfig& config, uint64_t vocab_fingerprint) {
  return ModelCheckpoint(TransformerF::init(config), vocab_fingerprint);
}

void save_checkpoint(const std::string& path, const ModelCheckpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  const auto& cfg = ckpt.model.config();
  write_pod(out, static_cast<int32_t>(cfg.dim));
  write_pod(out, static_cast<int32_t>(cfg.heads));
  write_pod(out, static_cast<int32_t>(cfg.layers));
  write_pod(out, static_cast<int32_t>(cfg.max_len));
  write_pod(out, static_cast<int32_t>(cfg.vocab_size));
  write_pod(out, cfg.seed);
  write_pod(out, ckpt.vocab_fingerprint);
  write_pod(out, ckpt.step);
  const uint8_t has_opt = ckpt.opt_m.empty() ? 0 : 1;
  write_pod(out, has_opt);
  write_floats(out, ckpt.model.data());
  if (has_opt) {
    write_floats(out, ckpt.opt_m);
    write_floats(out, ckpt.opt_v);
  }
  if (!out) fail(ErrorCode::io, "write failed: " + path);
}

ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    fail(ErrorCode::parse, path + ": not a checkpoint file");
  }
  const auto version = read_pod<uint32_t>(in, path);
  if (version != kVersion) {
    fail(ErrorCode::parse, path + ": unsupported checkpoint version " +
                               std::to_string(version));
  }
  ModelConfig cfg;
  cfg.dim = read_pod<int32_t>(in, path);
  cfg.heads = read_pod<int32_t>(in, path);
  cfg.layers = read_pod<int32_t>(in, path);
  cfg.max_len = read_pod<int32_t>(in, path);
  cfg.vocab_size = read_pod<int32_t>(in, path);
  cfg.seed = read_pod<uint64_t>(in, path);

  ModelCheckpoint ckpt(cfg);
  ckpt.vocab_fingerprint = read_pod<uint64_t>(in, path);
  ckpt.step = read_pod<int64_t>(in, path);
  const auto has_opt = read_pod<uint8_t>(in, path);
  read_floats(in, ckpt.model.data(), ckpt.model.layout().total, path);
  if (has_opt) {
    read_floats(in, ckpt.opt_m, ckpt.model.layout().total, path);
    read_floats(in, ckpt.opt_v, ckpt.model.layout().total, path);
  }
  return ckpt;
}

} // namespace mmtc
