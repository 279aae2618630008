#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "catp/encoder.hpp"
#include "catp/errors.hpp"
#include "catp/pruning.hpp"
#include "catp/refill.hpp"

namespace catp {

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;  // row-major

  std::size_t element_count() const;
};

using TensorMap = std::map<std::string, Tensor>;

// Binary container: magic "CATPW1\n", then a u32 tensor count, then per
// tensor a u32 name length, the name bytes, a u32 rank, the u32 dims, and the
// row-major float32 payload. All integers and floats little-endian.
TensorMap load_weight_file(const std::string& path);                 // throws IoError
void save_weight_file(const std::string& path, const TensorMap& t);  // throws IoError

// Every parameter of the forward pass, in compute layout.
struct ModelWeights {
  std::vector<double> cls;           // C
  Matrix pos;                        // (T+1) x C
  Matrix patch_proj;                 // (P*P*in_channels) x C
  std::vector<double> patch_bias;    // C
  std::vector<LayerWeights> layers;  // L
  std::vector<ScoringHead> scoring;  // S-1; scoring[i] guards entry to stage i+2
  DecoderWeights decoder;
};

struct WeightResolution {
  ModelWeights weights;
  std::vector<std::string> missing;  // names filled from the seeded fallback
};

// Maps canonical names to model slots. Tensors absent from the map are drawn
// from a per-name generator seeded with seed ^ fnv1a(name), so adding one
// tensor to a file never shifts the values of the others.
WeightResolution resolve_weights(const TensorMap& tensors, const EncoderConfig& config,
                                 std::uint64_t seed);

// Inverse of resolve_weights: a complete TensorMap (float32) for saving.
TensorMap export_weights(const ModelWeights& weights);

// The names resolve_weights understands, in file order.
std::vector<std::string> canonical_tensor_names(const EncoderConfig& config);

}  // namespace catp
