#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace mmtc {

// Parameter and gradient buffers use Eigen's aligned allocator: reductions
// over mapped rows peel to the vector width from the base address, so an
// allocation-dependent alignment would make repeated runs differ in the last
// bits. A fixed alignment keeps training bit-reproducible.
template <typename T>
using AlignedVec = std::vector<T, Eigen::aligned_allocator<T>>;

struct ModelConfig {
  int dim = 128;
  int heads = 4;
  int layers = 4;
  int max_len = 1024;
  int vocab_size = 0;
  uint64_t seed = 0;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void validate_config(const ModelConfig& config);

enum class ParamInit : uint8_t { normal, zeros, ones };

struct ParamSpec {
  std::string name;
  size_t offset = 0;
  int rows = 0, cols = 0;
  bool decay = false; // participates in decoupled weight decay
  ParamInit init = ParamInit::normal;

  size_t count() const { return static_cast<size_t>(rows) * cols; }
};

// Flat parameter layout in checkpoint order: token embedding, positional
// embedding, per-layer norm/attention/feed-forward tensors, final norm,
// output projection. The flat order is the serialization contract.
struct ParamLayout {
  std::vector<ParamSpec> specs;
  size_t total = 0;

  static ParamLayout build(const ModelConfig& config);
  int index_of(const std::string& name) const;
};

struct LayerParamIdx {
  int ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
  int ln2_g, ln2_b, w1, b1, w2, b2;
};

struct ParamIdx {
  int tok_emb, pos_emb, ln_f_g, ln_f_b, out_proj;
  std::vector<LayerParamIdx> layers;

  static ParamIdx resolve(const ParamLayout& layout, int num_layers);
};

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kInitStd = 0.02;

// Decoder-only autoregressive transformer: learned absolute positions,
// pre-norm blocks, GELU feed-forward with hidden 4*dim, untied output
// projection. Templated so the gradient check can run in double precision
// while training runs in float.
template <typename Scalar>
class Transformer {
public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapMat = Eigen::Map<Mat>;
  using ConstMapMat = Eigen::Map<const Mat>;

  explicit Transformer(const ModelConfig& config)
      : config_(config), layout_(ParamLayout::build(config)) {
    validate_config(config);
    data_.assign(layout_.total, Scalar(0));
    idx_ = ParamIdx::resolve(layout_, config.layers);
  }

  // Seeded initialization: weights and embeddings from normal(0, 0.02),
  // biases zero, norm gains one.
  static Transformer init(const ModelConfig& config) {
    Transformer model(config);
    Rng rng(config.seed);
    for (const auto& spec : model.layout_.specs) {
      Scalar* ptr = model.data_.data() + spec.offset;
      switch (spec.init) {
        case ParamInit::normal:
          for (size_t i = 0; i < spec.count(); ++i) {
            ptr[i] = static_cast<Scalar>(kInitStd * rng.next_normal());
          }
          break;
        case ParamInit::zeros:
          break;
        case ParamInit::ones:
          for (size_t i = 0; i < spec.count(); ++i) ptr[i] = Scalar(1);
          break;
      }
    }
    return model;
  }

  const ModelConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  const ParamIdx& idx() const { return idx_; }
  AlignedVec<Scalar>& data() { return data_; }
  const AlignedVec<Scalar>& data() const { return data_; }

  MapMat param(int spec_index) {
    const auto& s = layout_.specs[spec_index];
    return MapMat(data_.data() + s.offset, s.rows, s.cols);
  }
  ConstMapMat param(int spec_index) const {
    const auto& s = layout_.specs[spec_index];
    return ConstMapMat(data_.data() + s.offset, s.rows, s.cols);
  }
  MapMat param(const std::string& name) { return param(layout_.index_of(name)); }
  ConstMapMat param(const std::string& name) const { return param(layout_.index_of(name)); }

  // Logits for a batch of token rows; result is (rows*len) x vocab with row
  // r*len + t holding position t of batch row r.
  Mat forward(const std::vector<int32_t>& ids, int rows, int len) const {
    check_batch(ids, rows, len);
    Mat logits(static_cast<Eigen::Index>(rows) * len, config_.vocab_size);
    RowCache cache;
    for (int r = 0; r < rows; ++r) {
      logits.middleRows(static_cast<Eigen::Index>(r) * len, len) =
          forward_row(ids.data() + static_cast<size_t>(r) * len, len, cache);
    }
    return logits;
  }

  // Mean cross-entropy (nats) over non-pad targets; targets are the inputs
  // shifted left by one. `grads`, when non-null, must not alias the model
  // and is overwritten with d(loss)/d(param) in flat layout order.
  double loss(const std::vector<int32_t>& ids, int rows, int len,
              AlignedVec<Scalar>* grads = nullptr) const {
    check_batch(ids, rows, len);
    if (len < 2) fail(ErrorCode::invalid_argument, "loss needs sequences of length >= 2");
    size_t target_count = 0;
    for (int r = 0; r < rows; ++r) {
      for (int t = 0; t + 1 < len; ++t) {
        if (ids[static_cast<size_t>(r) * len + t + 1] != 0) ++target_count;
      }
    }
    if (target_count == 0) fail(ErrorCode::invalid_argument, "all targets are padding");
    if (grads) grads->assign(layout_.total, Scalar(0));

    double total_loss = 0.0;
    RowCache cache;
    for (int r = 0; r < rows; ++r) {
      const int32_t* row = ids.data() + static_cast<size_t>(r) * len;
      const Mat logits = forward_row(row, len, cache);
      Mat dlogits;
      if (grads) dlogits = Mat::Zero(len, config_.vocab_size);
      for (int t = 0; t + 1 < len; ++t) {
        const int32_t target = row[t + 1];
        if (target == 0) continue;
        const auto z = logits.row(t);
        const Scalar zmax = z.maxCoeff();
        double denom = 0.0;
        for (int j = 0; j < config_.vocab_size; ++j) {
          denom += std::exp(static_cast<double>(z[j] - zmax));
        }
        total_loss -= static_cast<double>(z[target] - zmax) - std::log(denom);
        if (grads) {
          const double scale = 1.0 / (denom * static_cast<double>(target_count));
          for (int j = 0; j < config_.vocab_size; ++j) {
            dlogits(t, j) = static_cast<Scalar>(
                std::exp(static_cast<double>(z[j] - zmax)) * scale);
          }
          dlogits(t, target) -= static_cast<Scalar>(1.0 / static_cast<double>(target_count));
        }
      }
      if (grads) backward_row(row, len, cache, dlogits, *grads);
    }
    return total_loss / static_cast<double>(target_count);
  }

private:
  struct LnCache {
    Mat xhat;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rstd;
  };
  struct LayerCache {
    Mat x_in; // residual stream entering the attention block
    LnCache ln1;
    Mat q, k, v;
    std::vector<Mat> attn; // per-head softmax matrices
    Mat attn_concat;
    Mat x_mid; // residual stream entering the feed-forward block
    LnCache ln2;
    Mat ff_pre; // pre-GELU
    Mat ff_act; // post-GELU
  };
  struct RowCache {
    Mat x0;
    std::vector<LayerCache> layers;
    LnCache lnf;
    Mat xf;
  };

  void check_batch(const std::vector<int32_t>& ids, int rows, int len) const {
    if (rows <= 0 || len <= 0 || ids.size() != static_cast<size_t>(rows) * len) {
      fail(ErrorCode::invalid_argument, "batch shape mismatch");
    }
    if (len > config_.max_len) {
      fail(ErrorCode::invalid_argument,
           "sequence length " + std::to_string(len) + " exceeds max_len " +
               std::to_string(config_.max_len));
    }
    for (int32_t id : ids) {
      if (id < 0 || id >= config_.vocab_size) {
        fail(ErrorCode::invalid_argument, "token id out of range: " + std::to_string(id));
      }
    }
  }

  static Scalar gelu(Scalar x) {
    return Scalar(0.5) * x *
           (Scalar(1) + static_cast<Scalar>(std::erf(static_cast<double>(x) / std::sqrt(2.0))));
  }
  static Scalar gelu_grad(Scalar x) {
    const double xd = static_cast<double>(x);
    const double cdf = 0.5 * (1.0 + std::erf(xd / std::sqrt(2.0)));
    const double pdf = std::exp(-0.5 * xd * xd) / std::sqrt(2.0 * 3.14159265358979323846);
    return static_cast<Scalar>(cdf + xd * pdf);
  }

  Mat layer_norm(const Mat& x, int gain_idx, int bias_idx, LnCache& cache) const {
    const auto gain = param(gain_idx);
    const auto bias = param(bias_idx);
    const Eigen::Index n = x.cols();
    cache.xhat.resize(x.rows(), n);
    cache.rstd.resize(x.rows());
    Mat out(x.rows(), n);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const Scalar mean = x.row(r).mean();
      const Scalar var = (x.row(r).array() - mean).square().sum() / Scalar(n);
      const Scalar rstd = Scalar(1) / std::sqrt(var + Scalar(kLayerNormEps));
      cache.rstd[r] = rstd;
      cache.xhat.row(r) = (x.row(r).array() - mean).matrix() * rstd;
      out.row(r) = cache.xhat.row(r).cwiseProduct(gain.row(0)) + bias.row(0);
    }
    return out;
  }

  Mat layer_norm_backward(const Mat& dy, const LnCache& cache, int gain_idx,
                          int bias_idx, AlignedVec<Scalar>& grads) const {
    const auto gain = param(gain_idx);
    const auto& gspec = layout_.specs[gain_idx];
    const auto& bspec = layout_.specs[bias_idx];
    Eigen::Map<Mat> dgain(grads.data() + gspec.offset, gspec.rows, gspec.cols);
    Eigen::Map<Mat> dbias(grads.data() + bspec.offset, bspec.rows, bspec.cols);
    Mat dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      dgain.row(0) += dy.row(r).cwiseProduct(cache.xhat.row(r));
      dbias.row(0) += dy.row(r);
      const auto dyhat = dy.row(r).cwiseProduct(gain.row(0));
      const Scalar m1 = dyhat.mean();
      const Scalar m2 = dyhat.cwiseProduct(cache.xhat.row(r)).mean();
      dx.row(r) =
          ((dyhat.array() - m1) - cache.xhat.row(r).array() * m2).matrix() * cache.rstd[r];
    }
    return dx;
  }

  Mat forward_row(const int32_t* ids, int len, RowCache& cache) const {
    const int dim = config_.dim;
    const int heads = config_.heads;
    const int head_dim = dim / heads;
    const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim));
    const auto tok_emb = param(idx_.tok_emb);
    const auto pos_emb = param(idx_.pos_emb);

    Mat x(len, dim);
    for (int t = 0; t < len; ++t) {
      x.row(t) = tok_emb.row(ids[t]) + pos_emb.row(t);
    }
    cache.x0 = x;
    cache.layers.assign(config_.layers, LayerCache{});

    for (int l = 0; l < config_.layers; ++l) {
      const LayerParamIdx& li = idx_.layers[l];
      LayerCache& lc = cache.layers[l];
      lc.x_in = x;

      const Mat ln1_out = layer_norm(x, li.ln1_g, li.ln1_b, lc.ln1);
      lc.q.noalias() = ln1_out * param(li.wq);
      lc.q.rowwise() += param(li.bq).row(0);
      lc.k.noalias() = ln1_out * param(li.wk);
      lc.k.rowwise() += param(li.bk).row(0);
      lc.v.noalias() = ln1_out * param(li.wv);
      lc.v.rowwise() += param(li.bv).row(0);

      lc.attn.assign(heads, Mat());
      lc.attn_concat.resize(len, dim);
      for (int h = 0; h < heads; ++h) {
        const auto qh = lc.q.middleCols(h * head_dim, head_dim);
        const auto kh = lc.k.middleCols(h * head_dim, head_dim);
        const auto vh = lc.v.middleCols(h * head_dim, head_dim);
        Mat scores = (qh * kh.transpose()) * inv_sqrt;
        Mat& probs = lc.attn[h];
        probs.setZero(len, len);
        for (int i = 0; i < len; ++i) {
          const Scalar smax = scores.row(i).head(i + 1).maxCoeff();
          Scalar denom = Scalar(0);
          for (int j = 0; j <= i; ++j) {
            probs(i, j) = std::exp(scores(i, j) - smax);
            denom += probs(i, j);
          }
          for (int j = 0; j <= i; ++j) probs(i, j) /= denom;
        }
        lc.attn_concat.middleCols(h * head_dim, head_dim).noalias() = probs * vh;
      }
      Mat attn_proj;
      attn_proj.noalias() = lc.attn_concat * param(li.wo);
      attn_proj.rowwise() += param(li.bo).row(0);
      x += attn_proj;
      lc.x_mid = x;

      const Mat ln2_out = layer_norm(x, li.ln2_g, li.ln2_b, lc.ln2);
      lc.ff_pre.noalias() = ln2_out * param(li.w1);
      lc.ff_pre.rowwise() += param(li.b1).row(0);
      lc.ff_act = lc.ff_pre.unaryExpr([](Scalar v) { return gelu(v); });
      Mat ff_out;
      ff_out.noalias() = lc.ff_act * param(li.w2);
      ff_out.rowwise() += param(li.b2).row(0);
      x += ff_out;
    }

    cache.xf = layer_norm(x, idx_.ln_f_g, idx_.ln_f_b, cache.lnf);
    Mat logits;
    logits.noalias() = cache.xf * param(idx_.out_proj);
    return logits;
  }

  // Reconstructs a layer norm's output from its cache.
  Mat ln_output(const LnCache& cache, int gain_idx, int bias_idx) const {
    Mat out(cache.xhat.rows(), cache.xhat.cols());
    for (Eigen::Index t = 0; t < out.rows(); ++t) {
      out.row(t) =
          cache.xhat.row(t).cwiseProduct(param(gain_idx).row(0)) + param(bias_idx).row(0);
    }
    return out;
  }

  void backward_row(const int32_t* ids, int len, const RowCache& cache,
                    const Mat& dlogits, AlignedVec<Scalar>& grads) const {
    const int dim = config_.dim;
    const int heads = config_.heads;
    const int head_dim = dim / heads;
    const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim));

    auto grad_of = [&](int spec_index) {
      const auto& s = layout_.specs[spec_index];
      return Eigen::Map<Mat>(grads.data() + s.offset, s.rows, s.cols);
    };

    grad_of(idx_.out_proj).noalias() += cache.xf.transpose() * dlogits;
    Mat dxf;
    dxf.noalias() = dlogits * param(idx_.out_proj).transpose();
    Mat dx = layer_norm_backward(dxf, cache.lnf, idx_.ln_f_g, idx_.ln_f_b, grads);

    for (int l = config_.layers - 1; l >= 0; --l) {
      const LayerParamIdx& li = idx_.layers[l];
      const LayerCache& lc = cache.layers[l];

      // Feed-forward block; dx currently holds d(block output).
      const Mat ln2_out = ln_output(lc.ln2, li.ln2_g, li.ln2_b);
      grad_of(li.w2).noalias() += lc.ff_act.transpose() * dx;
      grad_of(li.b2).row(0) += dx.colwise().sum();
      Mat dff_act;
      dff_act.noalias() = dx * param(li.w2).transpose();
      const Mat dff_pre = dff_act.binaryExpr(
          lc.ff_pre, [](Scalar d, Scalar x) { return d * gelu_grad(x); });
      grad_of(li.w1).noalias() += ln2_out.transpose() * dff_pre;
      grad_of(li.b1).row(0) += dff_pre.colwise().sum();
      Mat dln2_out;
      dln2_out.noalias() = dff_pre * param(li.w1).transpose();
      dx += layer_norm_backward(dln2_out, lc.ln2, li.ln2_g, li.ln2_b, grads);

      // Attention block; dx now holds d(x_mid).
      grad_of(li.wo).noalias() += lc.attn_concat.transpose() * dx;
      grad_of(li.bo).row(0) += dx.colwise().sum();
      Mat dattn_concat;
      dattn_concat.noalias() = dx * param(li.wo).transpose();

      Mat dq = Mat::Zero(len, dim), dk = Mat::Zero(len, dim), dv = Mat::Zero(len, dim);
      for (int h = 0; h < heads; ++h) {
        const auto qh = lc.q.middleCols(h * head_dim, head_dim);
        const auto kh = lc.k.middleCols(h * head_dim, head_dim);
        const auto vh = lc.v.middleCols(h * head_dim, head_dim);
        const Mat& probs = lc.attn[h];
        const auto doh = dattn_concat.middleCols(h * head_dim, head_dim);
        Mat dprobs;
        dprobs.noalias() = doh * vh.transpose();
        dv.middleCols(h * head_dim, head_dim).noalias() += probs.transpose() * doh;
        // Softmax backward per row; masked entries have probs == 0 and drop out.
        Mat dscores(len, len);
        for (int i = 0; i < len; ++i) {
          const Scalar dot = dprobs.row(i).cwiseProduct(probs.row(i)).sum();
          dscores.row(i) =
              probs.row(i).cwiseProduct((dprobs.row(i).array() - dot).matrix());
        }
        dq.middleCols(h * head_dim, head_dim).noalias() += (dscores * kh) * inv_sqrt;
        dk.middleCols(h * head_dim, head_dim).noalias() +=
            (dscores.transpose() * qh) * inv_sqrt;
      }

      const Mat ln1_out = ln_output(lc.ln1, li.ln1_g, li.ln1_b);
      grad_of(li.wq).noalias() += ln1_out.transpose() * dq;
      grad_of(li.bq).row(0) += dq.colwise().sum();
      grad_of(li.wk).noalias() += ln1_out.transpose() * dk;
      grad_of(li.bk).row(0) += dk.colwise().sum();
      grad_of(li.wv).noalias() += ln1_out.transpose() * dv;
      grad_of(li.bv).row(0) += dv.colwise().sum();
      Mat dln1_out;
      dln1_out.noalias() = dq * param(li.wq).transpose();
      dln1_out.noalias() += dk * param(li.wk).transpose();
      dln1_out.noalias() += dv * param(li.wv).transpose();
      dx += layer_norm_backward(dln1_out, lc.ln1, li.ln1_g, li.ln1_b, grads);
    }

    auto dtok = grad_of(idx_.tok_emb);
    auto dpos = grad_of(idx_.pos_emb);
    for (int t = 0; t < len; ++t) {
      dtok.row(ids[t]) += dx.row(t);
      dpos.row(t) += dx.row(t);
    }
  }

  ModelConfig config_;
  ParamLayout layout_;
  ParamIdx idx_;
  AlignedVec<Scalar> data_;
};

// Incremental decoder with per-layer key/value caches for sampling streams.
template <typename Scalar>
class Decoder {
public:
  using Mat = typename Transformer<Scalar>::Mat;
  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  explicit Decoder(const Transformer<Scalar>& model)
      : model_(model), dim_(model.config().dim), heads_(model.config().heads) {
    const int layers = model.config().layers;
    k_cache_.assign(layers, Mat(model.config().max_len, dim_));
    v_cache_.assign(layers, Mat(model.config().max_len, dim_));
  }

  int length() const { return len_; }

  // Feeds one token, returns the next-token logits.
  RowVec step(int32_t id) {
    const auto& cfg = model_.config();
    if (id < 0 || id >= cfg.vocab_size) {
      fail(ErrorCode::invalid_argument, "token id out of range: " + std::to_string(id));
    }
    if (len_ >= cfg.max_len) {
      fail(ErrorCode::invalid_argument, "decoder exceeded max_len");
    }
    const int head_dim = dim_ / heads_;
    const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim));
    const auto& idx = model_.idx();
    const int t = len_;

    RowVec x = model_.param(idx.tok_emb).row(id) + model_.param(idx.pos_emb).row(t);
    for (int l = 0; l < cfg.layers; ++l) {
      const auto& li = idx.layers[l];
      const RowVec ln1 = norm_row(x, li.ln1_g, li.ln1_b);
      const RowVec q = ln1 * model_.param(li.wq) + model_.param(li.bq).row(0);
      k_cache_[l].row(t) = ln1 * model_.param(li.wk) + model_.param(li.bk).row(0);
      v_cache_[l].row(t) = ln1 * model_.param(li.wv) + model_.param(li.bv).row(0);

      RowVec attn_out(dim_);
      for (int h = 0; h < heads_; ++h) {
        const auto qh = q.segment(h * head_dim, head_dim);
        const auto kh = k_cache_[l].middleCols(h * head_dim, head_dim).topRows(t + 1);
        const auto vh = v_cache_[l].middleCols(h * head_dim, head_dim).topRows(t + 1);
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scores = (kh * qh.transpose()) * inv_sqrt;
        const Scalar smax = scores.maxCoeff();
        scores = (scores.array() - smax).exp();
        scores /= scores.sum();
        attn_out.segment(h * head_dim, head_dim).noalias() = scores.transpose() * vh;
      }
      x += attn_out * model_.param(li.wo) + model_.param(li.bo).row(0);

      const RowVec ln2 = norm_row(x, li.ln2_g, li.ln2_b);
      RowVec hidden = ln2 * model_.param(li.w1) + model_.param(li.b1).row(0);
      hidden = hidden.unaryExpr([](Scalar v) {
        return Scalar(0.5) * v *
               (Scalar(1) +
                static_cast<Scalar>(std::erf(static_cast<double>(v) / std::sqrt(2.0))));
      });
      x += hidden * model_.param(li.w2) + model_.param(li.b2).row(0);
    }
    const RowVec xf = norm_row(x, idx.ln_f_g, idx.ln_f_b);
    ++len_;
    return xf * model_.param(idx.out_proj);
  }

private:
  RowVec norm_row(const RowVec& x, int gain_idx, int bias_idx) const {
    const Scalar mean = x.mean();
    const Scalar var = (x.array() - mean).square().sum() / Scalar(x.size());
    const Scalar rstd = Scalar(1) / std::sqrt(var + Scalar(kLayerNormEps));
    return (((x.array() - mean) * rstd).matrix().cwiseProduct(
               model_.param(gain_idx).row(0))) +
           model_.param(bias_idx).row(0);
  }

  const Transformer<Scalar>& model_;
  int dim_, heads_;
  std::vector<Mat> k_cache_, v_cache_;
  int len_ = 0;
};

using TransformerF = Transformer<float>;
using TransformerD = Transformer<double>;

} // namespace mmtc
