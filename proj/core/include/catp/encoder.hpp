#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "catp/image.hpp"
#include "catp/matrix.hpp"

namespace catp {

enum class ProtoOrigin { low, high };

// A compensation token appended to the sequence. It has no grid position, so
// it never appears in an IndexMap and is never scored.
struct ProtoToken {
  std::vector<double> feature;
  ProtoOrigin origin;
};

// Original grid positions of the active patch tokens, in slot order.
// Pipeline-produced maps are canonical: strictly increasing, values in [0, T).
struct IndexMap {
  std::vector<std::size_t> slots;

  std::size_t size() const { return slots.size(); }
  bool is_canonical(std::size_t grid_size) const;
};

struct TokenSequence {
  std::vector<double> cls;            // 1 x C
  Matrix patches;                     // N x C
  std::vector<ProtoToken> prototypes; // 0..2 entries
  IndexMap index_map;                 // length N

  std::size_t embed_dim() const { return cls.size(); }
  std::size_t token_count() const { return 1 + patches.rows() + prototypes.size(); }
};

struct EncoderConfig {
  std::size_t image_h = 64;
  std::size_t image_w = 64;
  std::size_t patch_size = 16;
  std::size_t embed_dim = 32;
  std::size_t num_layers = 8;
  std::size_t num_heads = 4;
  double mlp_ratio = 4.0;
  std::size_t in_channels = 3;
  // Pruning occurs after these 1-based layer indices; S = boundaries + 1.
  std::vector<std::size_t> stage_boundaries = {2, 4, 6};

  std::size_t grid_h() const { return image_h / patch_size; }
  std::size_t grid_w() const { return image_w / patch_size; }
  std::size_t num_patches() const { return grid_h() * grid_w(); }
  std::size_t num_stages() const { return stage_boundaries.size() + 1; }
  std::size_t hidden_dim() const;

  // First and last (inclusive) 1-based layer index of a 1-based stage.
  std::size_t stage_first_layer(std::size_t stage) const;
  std::size_t stage_last_layer(std::size_t stage) const;

  void validate() const;  // throws std::invalid_argument
};

struct LayerWeights {
  std::vector<double> ln1_gamma, ln1_beta;
  Matrix wq, wk, wv, wo;  // C x C
  std::vector<double> bq, bk, bv, bo;
  std::vector<double> ln2_gamma, ln2_beta;
  Matrix w1;  // C x hidden
  std::vector<double> b1;
  Matrix w2;  // hidden x C
  std::vector<double> b2;
};

// Per-head attention matrices, captured on request.
struct AttentionTrace {
  std::vector<Matrix> head_attn;
};

// Projects each non-overlapping P x P patch (flattened row-major, channel
// fastest) through `projection` ((P*P*channels) x C) plus bias. Patch order is
// row-major over the grid.
Matrix patch_embed(const Image& image, const Matrix& projection,
                   std::span<const double> bias, std::size_t patch_size);

// X0 = [cls; patches] + pos_embedding; index_map = [0 .. T).
TokenSequence assemble_input(const Matrix& patch_tokens,
                             std::span<const double> cls_embedding,
                             const Matrix& pos_embedding);

// Pre-norm block: x + MHSA(LN(x)), then h + MLP(LN(h)). Attention runs over
// cls, patches, and prototypes jointly; index_map passes through unchanged.
TokenSequence transformer_layer(const TokenSequence& seq, const LayerWeights& weights,
                                std::size_t num_heads, AttentionTrace* trace = nullptr);

// Applies the K layers belonging to 1-based `stage_index` in order.
TokenSequence run_stage(const TokenSequence& seq, const EncoderConfig& config,
                        std::size_t stage_index, std::span<const LayerWeights> layers);

}  // namespace catp
