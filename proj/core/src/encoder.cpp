#include "catp/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "catp/numerics.hpp"

namespace catp {

namespace {

// [cls; patches; prototypes] stacked into one (1 + N + P) x C matrix.
Matrix stack_tokens(const TokenSequence& seq) {
  const std::size_t c = seq.embed_dim();
  Matrix x(seq.token_count(), c);
  x.set_row(0, seq.cls);
  for (std::size_t i = 0; i < seq.patches.rows(); ++i) {
    x.set_row(1 + i, seq.patches.row(i));
  }
  for (std::size_t p = 0; p < seq.prototypes.size(); ++p) {
    x.set_row(1 + seq.patches.rows() + p, seq.prototypes[p].feature);
  }
  return x;
}

TokenSequence unstack_tokens(const Matrix& x, const TokenSequence& like) {
  TokenSequence out;
  out.cls.assign(x.row(0).begin(), x.row(0).end());
  out.patches = Matrix(like.patches.rows(), x.cols());
  for (std::size_t i = 0; i < like.patches.rows(); ++i) {
    out.patches.set_row(i, x.row(1 + i));
  }
  out.prototypes = like.prototypes;
  for (std::size_t p = 0; p < like.prototypes.size(); ++p) {
    const auto row = x.row(1 + like.patches.rows() + p);
    out.prototypes[p].feature.assign(row.begin(), row.end());
  }
  out.index_map = like.index_map;
  return out;
}

Matrix linear(const Matrix& x, const Matrix& w, std::span<const double> b) {
  Matrix y = matmul(x, w);
  if (b.size() != y.cols()) {
    throw std::invalid_argument("linear: bias length mismatch");
  }
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += b[j];
  }
  return y;
}

Matrix head_slice(const Matrix& m, std::size_t head, std::size_t head_dim) {
  Matrix out(m.rows(), head_dim);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < head_dim; ++j) {
      out(i, j) = m(i, head * head_dim + j);
    }
  }
  return out;
}

Matrix mhsa(const Matrix& xn, const LayerWeights& w, std::size_t num_heads,
            AttentionTrace* trace) {
  const std::size_t c = xn.cols();
  if (c % num_heads != 0) {
    throw std::invalid_argument("mhsa: embed_dim not divisible by num_heads");
  }
  const std::size_t head_dim = c / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  const Matrix q = linear(xn, w.wq, w.bq);
  const Matrix k = linear(xn, w.wk, w.bk);
  const Matrix v = linear(xn, w.wv, w.bv);

  if (trace) trace->head_attn.clear();

  Matrix concat(xn.rows(), c);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const Matrix qh = head_slice(q, h, head_dim);
    const Matrix kh = head_slice(k, h, head_dim);
    const Matrix vh = head_slice(v, h, head_dim);
    Matrix logits = matmul(qh, transpose(kh));
    for (double& value : logits.data()) value *= scale;
    const Matrix attn = softmax_rows(logits);
    if (trace) trace->head_attn.push_back(attn);
    const Matrix oh = matmul(attn, vh);
    for (std::size_t i = 0; i < oh.rows(); ++i) {
      for (std::size_t j = 0; j < head_dim; ++j) {
        concat(i, h * head_dim + j) = oh(i, j);
      }
    }
  }
  return linear(concat, w.wo, w.bo);
}

}  // namespace

bool IndexMap::is_canonical(std::size_t grid_size) const {
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i] >= grid_size) return false;
    if (i > 0 && slots[i] <= slots[i - 1]) return false;
  }
  return true;
}

std::size_t EncoderConfig::hidden_dim() const {
  return static_cast<std::size_t>(std::llround(mlp_ratio * static_cast<double>(embed_dim)));
}

std::size_t EncoderConfig::stage_first_layer(std::size_t stage) const {
  return stage == 1 ? 1 : stage_boundaries[stage - 2] + 1;
}

std::size_t EncoderConfig::stage_last_layer(std::size_t stage) const {
  return stage == num_stages() ? num_layers : stage_boundaries[stage - 1];
}

void EncoderConfig::validate() const {
  if (patch_size == 0 || image_h == 0 || image_w == 0) {
    throw std::invalid_argument("config: image and patch sizes must be positive");
  }
  if (image_h % patch_size != 0 || image_w % patch_size != 0) {
    throw std::invalid_argument("config: image dimensions must be divisible by patch_size");
  }
  if (embed_dim == 0 || num_heads == 0 || embed_dim % num_heads != 0) {
    throw std::invalid_argument("config: embed_dim must be divisible by num_heads");
  }
  if (num_layers == 0) {
    throw std::invalid_argument("config: num_layers must be positive");
  }
  if (!(mlp_ratio > 0.0) || hidden_dim() == 0) {
    throw std::invalid_argument("config: mlp_ratio must be positive");
  }
  if (in_channels == 0) {
    throw std::invalid_argument("config: in_channels must be positive");
  }
  std::size_t prev = 0;
  for (std::size_t b : stage_boundaries) {
    if (b <= prev || b >= num_layers) {
      throw std::invalid_argument(
          "config: stage_boundaries must be ascending and inside [1, num_layers)");
    }
    prev = b;
  }
  if (num_layers % num_stages() != 0) {
    throw std::invalid_argument("config: num_layers must be divisible by the stage count");
  }
}

Matrix patch_embed(const Image& image, const Matrix& projection,
                   std::span<const double> bias, std::size_t patch_size) {
  if (patch_size == 0 || image.height % patch_size != 0 || image.width % patch_size != 0) {
    throw std::invalid_argument("patch_embed: image dimensions not divisible by patch size");
  }
  const std::size_t flat = patch_size * patch_size * image.channels;
  if (projection.rows() != flat) {
    throw std::invalid_argument("patch_embed: projection rows != P*P*channels");
  }
  const std::size_t gh = image.height / patch_size;
  const std::size_t gw = image.width / patch_size;

  Matrix flattened(gh * gw, flat);
  for (std::size_t gy = 0; gy < gh; ++gy) {
    for (std::size_t gx = 0; gx < gw; ++gx) {
      auto row = flattened.row(gy * gw + gx);
      std::size_t idx = 0;
      for (std::size_t py = 0; py < patch_size; ++py) {
        for (std::size_t px = 0; px < patch_size; ++px) {
          for (std::size_t c = 0; c < image.channels; ++c) {
            row[idx++] = image.at(gy * patch_size + py, gx * patch_size + px, c);
          }
        }
      }
    }
  }
  return linear(flattened, projection, bias);
}

TokenSequence assemble_input(const Matrix& patch_tokens,
                             std::span<const double> cls_embedding,
                             const Matrix& pos_embedding) {
  const std::size_t t = patch_tokens.rows();
  const std::size_t c = patch_tokens.cols();
  if (cls_embedding.size() != c) {
    throw std::invalid_argument("assemble_input: cls length != embed_dim");
  }
  if (pos_embedding.rows() != t + 1 || pos_embedding.cols() != c) {
    throw std::invalid_argument("assemble_input: pos_embedding must be (T+1) x C");
  }
  TokenSequence seq;
  seq.cls.resize(c);
  for (std::size_t j = 0; j < c; ++j) seq.cls[j] = cls_embedding[j] + pos_embedding(0, j);
  seq.patches = Matrix(t, c);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      seq.patches(i, j) = patch_tokens(i, j) + pos_embedding(i + 1, j);
    }
  }
  seq.index_map.slots.resize(t);
  for (std::size_t i = 0; i < t; ++i) seq.index_map.slots[i] = i;
  return seq;
}

TokenSequence transformer_layer(const TokenSequence& seq, const LayerWeights& weights,
                                std::size_t num_heads, AttentionTrace* trace) {
  const Matrix x = stack_tokens(seq);
  const Matrix xn = layer_norm(x, weights.ln1_gamma, weights.ln1_beta);
  Matrix h = mhsa(xn, weights, num_heads, trace);
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] += x.data()[i];

  const Matrix hn = layer_norm(h, weights.ln2_gamma, weights.ln2_beta);
  Matrix mlp = linear(gelu(linear(hn, weights.w1, weights.b1)), weights.w2, weights.b2);
  for (std::size_t i = 0; i < mlp.size(); ++i) mlp.data()[i] += h.data()[i];

  return unstack_tokens(mlp, seq);
}

TokenSequence run_stage(const TokenSequence& seq, const EncoderConfig& config,
                        std::size_t stage_index, std::span<const LayerWeights> layers) {
  if (stage_index < 1 || stage_index > config.num_stages()) {
    throw std::invalid_argument("run_stage: stage_index out of range");
  }
  if (layers.size() != config.num_layers) {
    throw std::invalid_argument("run_stage: expected one weight set per layer");
  }
  TokenSequence out = seq;
  for (std::size_t layer = config.stage_first_layer(stage_index);
       layer <= config.stage_last_layer(stage_index); ++layer) {
    out = transformer_layer(out, layers[layer - 1], config.num_heads);
  }
  return out;
}

}  // namespace catp
