#include "catp/weights.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>

#include "catp/rng.hpp"

namespace catp {

namespace {

constexpr char kMagic[] = "CATPW1\n";
constexpr std::size_t kMagicLen = 7;

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (const char ch : text) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 1099511628211ULL;
  }
  return hash;
}

void write_u32(std::ostream& out, std::uint32_t value) {
  const char bytes[4] = {static_cast<char>(value & 0xff),
                         static_cast<char>((value >> 8) & 0xff),
                         static_cast<char>((value >> 16) & 0xff),
                         static_cast<char>((value >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw IoError("weight file truncated while reading " + what);
  }
  return static_cast<std::uint32_t>(bytes[0]) |
         (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

// Fills model slots, drawing any tensor missing from the file from a
// generator seeded by the tensor's name.
class Resolver {
 public:
  Resolver(const TensorMap& tensors, std::uint64_t seed, std::vector<std::string>& missing)
      : tensors_(tensors), seed_(seed), missing_(missing) {}

  enum class Init { zeros, ones, gaussian, gaussian_unit };

  Matrix matrix(const std::string& name, std::size_t rows, std::size_t cols, Init init) {
    const Tensor* tensor = find(name, {rows, cols});
    if (!tensor) return fallback_matrix(name, rows, cols, init);
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < tensor->values.size(); ++i) {
      out.data()[i] = static_cast<double>(tensor->values[i]);
    }
    return out;
  }

  std::vector<double> vector(const std::string& name, std::size_t n, Init init) {
    const Tensor* tensor = find(name, {n});
    if (!tensor) return fallback_vector(name, n, init);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(tensor->values[i]);
    return out;
  }

  double scalar(const std::string& name, Init init) { return vector(name, 1, init)[0]; }

 private:
  const Tensor* find(const std::string& name, std::vector<std::size_t> want_dims) {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) {
      missing_.push_back(name);
      return nullptr;
    }
    const Tensor& tensor = it->second;
    bool match = tensor.dims.size() == want_dims.size();
    for (std::size_t i = 0; match && i < want_dims.size(); ++i) {
      match = tensor.dims[i] == want_dims[i];
    }
    if (!match) {
      throw IoError("tensor '" + name + "' has unexpected dimensions for this config");
    }
    return &tensor;
  }

  Rng rng_for(const std::string& name) const { return Rng(seed_ ^ fnv1a(name)); }

  Matrix fallback_matrix(const std::string& name, std::size_t rows, std::size_t cols,
                         Init init) {
    switch (init) {
      case Init::zeros: return Matrix(rows, cols, 0.0);
      case Init::ones: return Matrix(rows, cols, 1.0);
      case Init::gaussian: {
        Rng rng = rng_for(name);
        return gaussian_init(rng, rows, cols, 0.02);
      }
      case Init::gaussian_unit: {
        Rng rng = rng_for(name);
        return gaussian_init(rng, rows, cols, 1.0);
      }
    }
    return Matrix(rows, cols);
  }

  std::vector<double> fallback_vector(const std::string& name, std::size_t n, Init init) {
    switch (init) {
      case Init::zeros: return std::vector<double>(n, 0.0);
      case Init::ones: return std::vector<double>(n, 1.0);
      case Init::gaussian: {
        Rng rng = rng_for(name);
        return gaussian_vector(rng, n, 0.02);
      }
      case Init::gaussian_unit: {
        Rng rng = rng_for(name);
        return gaussian_vector(rng, n, 1.0);
      }
    }
    return std::vector<double>(n, 0.0);
  }

  const TensorMap& tensors_;
  std::uint64_t seed_;
  std::vector<std::string>& missing_;
};

Tensor to_tensor(const Matrix& m) {
  Tensor tensor;
  tensor.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  tensor.values.reserve(m.size());
  for (const double value : m.data()) tensor.values.push_back(static_cast<float>(value));
  return tensor;
}

Tensor to_tensor(const std::vector<double>& v) {
  Tensor tensor;
  tensor.dims = {static_cast<std::uint32_t>(v.size())};
  tensor.values.reserve(v.size());
  for (const double value : v) tensor.values.push_back(static_cast<float>(value));
  return tensor;
}

Tensor to_tensor(double scalar) { return to_tensor(std::vector<double>{scalar}); }

std::string layer_prefix(std::size_t i) { return "layers." + std::to_string(i) + "."; }

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t count = 1;
  for (const std::uint32_t dim : dims) count *= dim;
  return dims.empty() ? 0 : count;
}

TensorMap load_weight_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file: " + path);

  char magic[kMagicLen];
  if (!in.read(magic, kMagicLen) || std::string_view(magic, kMagicLen) != kMagic) {
    throw IoError("not a weight file (bad magic): " + path);
  }

  const std::uint32_t count = read_u32(in, "tensor count");
  TensorMap tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(in, "name length");
    if (name_len == 0) throw IoError("weight file contains an empty tensor name");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      throw IoError("weight file truncated while reading a tensor name");
    }
    Tensor tensor;
    const std::uint32_t rank = read_u32(in, "rank of '" + name + "'");
    std::uint64_t elements = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      tensor.dims.push_back(read_u32(in, "dims of '" + name + "'"));
      elements *= tensor.dims.back();
    }
    if (rank == 0) elements = 0;
    if (elements > std::numeric_limits<std::uint32_t>::max()) {
      throw IoError("tensor '" + name + "' is implausibly large");
    }
    tensor.values.resize(elements);
    if (elements > 0 &&
        !in.read(reinterpret_cast<char*>(tensor.values.data()),
                 static_cast<std::streamsize>(elements * sizeof(float)))) {
      throw IoError("weight file truncated in payload of '" + name + "'");
    }
    if constexpr (std::endian::native == std::endian::big) {
      for (float& value : tensor.values) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
        bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) |
               (bits << 24);
        value = std::bit_cast<float>(bits);
      }
    }
    if (!tensors.emplace(std::move(name), std::move(tensor)).second) {
      throw IoError("weight file declares a tensor name twice");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError("weight file has trailing bytes after the last tensor");
  }
  return tensors;
}

void save_weight_file(const std::string& path, const TensorMap& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create weight file: " + path);
  out.write(kMagic, kMagicLen);
  write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
    for (const std::uint32_t dim : tensor.dims) write_u32(out, dim);
    if (tensor.element_count() != tensor.values.size()) {
      throw IoError("tensor '" + name + "' dims do not match its payload size");
    }
    for (const float value : tensor.values) {
      write_u32(out, std::bit_cast<std::uint32_t>(value));
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

WeightResolution resolve_weights(const TensorMap& tensors, const EncoderConfig& config,
                                 std::uint64_t seed) {
  config.validate();
  const std::size_t c = config.embed_dim;
  const std::size_t t = config.num_patches();
  const std::size_t hidden = config.hidden_dim();
  const std::size_t flat = config.patch_size * config.patch_size * config.in_channels;
  const std::size_t dim = decoder_dim(c);

  WeightResolution result;
  Resolver resolve(tensors, seed, result.missing);
  using Init = Resolver::Init;
  ModelWeights& w = result.weights;

  w.cls = resolve.vector("cls_token", c, Init::gaussian);
  w.pos = resolve.matrix("pos_embed", t + 1, c, Init::gaussian);
  w.patch_proj = resolve.matrix("patch_embed.weight", flat, c, Init::gaussian);
  w.patch_bias = resolve.vector("patch_embed.bias", c, Init::zeros);

  w.layers.resize(config.num_layers);
  for (std::size_t i = 0; i < config.num_layers; ++i) {
    const std::string prefix = layer_prefix(i);
    LayerWeights& layer = w.layers[i];
    layer.ln1_gamma = resolve.vector(prefix + "ln1.gamma", c, Init::ones);
    layer.ln1_beta = resolve.vector(prefix + "ln1.beta", c, Init::zeros);
    layer.wq = resolve.matrix(prefix + "attn.wq", c, c, Init::gaussian);
    layer.wk = resolve.matrix(prefix + "attn.wk", c, c, Init::gaussian);
    layer.wv = resolve.matrix(prefix + "attn.wv", c, c, Init::gaussian);
    layer.wo = resolve.matrix(prefix + "attn.wo", c, c, Init::gaussian);
    layer.bq = resolve.vector(prefix + "attn.bq", c, Init::zeros);
    layer.bk = resolve.vector(prefix + "attn.bk", c, Init::zeros);
    layer.bv = resolve.vector(prefix + "attn.bv", c, Init::zeros);
    layer.bo = resolve.vector(prefix + "attn.bo", c, Init::zeros);
    layer.ln2_gamma = resolve.vector(prefix + "ln2.gamma", c, Init::ones);
    layer.ln2_beta = resolve.vector(prefix + "ln2.beta", c, Init::zeros);
    layer.w1 = resolve.matrix(prefix + "mlp.w1", c, hidden, Init::gaussian);
    layer.b1 = resolve.vector(prefix + "mlp.b1", hidden, Init::zeros);
    layer.w2 = resolve.matrix(prefix + "mlp.w2", hidden, c, Init::gaussian);
    layer.b2 = resolve.vector(prefix + "mlp.b2", c, Init::zeros);
  }

  for (std::size_t stage = 2; stage <= config.num_stages(); ++stage) {
    const std::string prefix = "score." + std::to_string(stage) + ".";
    ScoringHead head;
    head.weight = resolve.vector(prefix + "weight", c, Init::gaussian_unit);
    head.bias = resolve.scalar(prefix + "bias", Init::zeros);
    w.scoring.push_back(std::move(head));
  }

  for (std::size_t stage = 1; stage <= config.num_stages(); ++stage) {
    const std::string prefix = "decoder.level." + std::to_string(stage) + ".";
    w.decoder.level_weight.push_back(resolve.matrix(prefix + "weight", c, dim, Init::gaussian));
    w.decoder.level_bias.push_back(resolve.vector(prefix + "bias", dim, Init::zeros));
  }
  w.decoder.out_weight = resolve.vector("decoder.out.weight", dim, Init::gaussian);
  w.decoder.out_bias = resolve.scalar("decoder.out.bias", Init::zeros);

  return result;
}

TensorMap export_weights(const ModelWeights& weights) {
  TensorMap tensors;
  tensors["cls_token"] = to_tensor(weights.cls);
  tensors["pos_embed"] = to_tensor(weights.pos);
  tensors["patch_embed.weight"] = to_tensor(weights.patch_proj);
  tensors["patch_embed.bias"] = to_tensor(weights.patch_bias);
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    const std::string prefix = layer_prefix(i);
    const LayerWeights& layer = weights.layers[i];
    tensors[prefix + "ln1.gamma"] = to_tensor(layer.ln1_gamma);
    tensors[prefix + "ln1.beta"] = to_tensor(layer.ln1_beta);
    tensors[prefix + "attn.wq"] = to_tensor(layer.wq);
    tensors[prefix + "attn.wk"] = to_tensor(layer.wk);
    tensors[prefix + "attn.wv"] = to_tensor(layer.wv);
    tensors[prefix + "attn.wo"] = to_tensor(layer.wo);
    tensors[prefix + "attn.bq"] = to_tensor(layer.bq);
    tensors[prefix + "attn.bk"] = to_tensor(layer.bk);
    tensors[prefix + "attn.bv"] = to_tensor(layer.bv);
    tensors[prefix + "attn.bo"] = to_tensor(layer.bo);
    tensors[prefix + "ln2.gamma"] = to_tensor(layer.ln2_gamma);
    tensors[prefix + "ln2.beta"] = to_tensor(layer.ln2_beta);
    tensors[prefix + "mlp.w1"] = to_tensor(layer.w1);
    tensors[prefix + "mlp.b1"] = to_tensor(layer.b1);
    tensors[prefix + "mlp.w2"] = to_tensor(layer.w2);
    tensors[prefix + "mlp.b2"] = to_tensor(layer.b2);
  }
  for (std::size_t i = 0; i < weights.scoring.size(); ++i) {
    const std::string prefix = "score." + std::to_string(i + 2) + ".";
    tensors[prefix + "weight"] = to_tensor(weights.scoring[i].weight);
    tensors[prefix + "bias"] = to_tensor(weights.scoring[i].bias);
  }
  for (std::size_t i = 0; i < weights.decoder.level_weight.size(); ++i) {
    const std::string prefix = "decoder.level." + std::to_string(i + 1) + ".";
    tensors[prefix + "weight"] = to_tensor(weights.decoder.level_weight[i]);
    tensors[prefix + "bias"] = to_tensor(weights.decoder.level_bias[i]);
  }
  tensors["decoder.out.weight"] = to_tensor(weights.decoder.out_weight);
  tensors["decoder.out.bias"] = to_tensor(weights.decoder.out_bias);
  return tensors;
}

std::vector<std::string> canonical_tensor_names(const EncoderConfig& config) {
  std::vector<std::string> names = {"cls_token", "pos_embed", "patch_embed.weight",
                                    "patch_embed.bias"};
  for (std::size_t i = 0; i < config.num_layers; ++i) {
    const std::string prefix = layer_prefix(i);
    for (const char* leaf :
         {"ln1.gamma", "ln1.beta", "attn.wq", "attn.wk", "attn.wv", "attn.wo", "attn.bq",
          "attn.bk", "attn.bv", "attn.bo", "ln2.gamma", "ln2.beta", "mlp.w1", "mlp.b1",
          "mlp.w2", "mlp.b2"}) {
      names.push_back(prefix + leaf);
    }
  }
  for (std::size_t stage = 2; stage <= config.num_stages(); ++stage) {
    names.push_back("score." + std::to_string(stage) + ".weight");
    names.push_back("score." + std::to_string(stage) + ".bias");
  }
  for (std::size_t stage = 1; stage <= config.num_stages(); ++stage) {
    names.push_back("decoder.level." + std::to_string(stage) + ".weight");
    names.push_back("decoder.level." + std::to_string(stage) + ".bias");
  }
  names.push_back("decoder.out.weight");
  names.push_back("decoder.out.bias");
  return names;
}

}  // namespace catp
