#include "catp/refill.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "catp/numerics.hpp"

namespace catp {

Image PredictionMap::to_image() const {
  Image img;
  img.height = height;
  img.width = width;
  img.channels = 1;
  img.pixels = values;
  return img;
}

std::size_t decoder_dim(std::size_t embed_dim) {
  return std::max<std::size_t>(embed_dim / 2, 8);
}

Matrix snapshot_dense(const Matrix& running_buffer, const TokenSequence& stage_output) {
  if (stage_output.index_map.size() != stage_output.patches.rows()) {
    throw std::invalid_argument("snapshot_dense: index map length != patch count");
  }
  Matrix out = running_buffer;
  for (std::size_t t = 0; t < stage_output.patches.rows(); ++t) {
    const std::size_t pos = stage_output.index_map.slots[t];
    if (pos >= out.rows()) {
      throw std::invalid_argument("snapshot_dense: grid position out of range");
    }
    out.set_row(pos, stage_output.patches.row(t));
  }
  return out;
}

FeaturePyramid hierarchical_refill(const std::vector<Matrix>& bases,
                                   const std::vector<IndexMap>& active,
                                   std::size_t grid_h, std::size_t grid_w) {
  const std::size_t num_stages = bases.size();
  const std::size_t grid_size = grid_h * grid_w;
  if (num_stages == 0 || active.size() != num_stages) {
    throw std::invalid_argument("hierarchical_refill: one base and index map per stage");
  }
  for (const Matrix& base : bases) {
    if (base.rows() != grid_size) {
      throw std::invalid_argument("hierarchical_refill: base snapshot is not grid sized");
    }
  }
  for (std::size_t s = 0; s + 1 < num_stages; ++s) {
    const std::unordered_set<std::size_t> shallow(active[s].slots.begin(),
                                                  active[s].slots.end());
    for (std::size_t pos : active[s + 1].slots) {
      if (!shallow.contains(pos)) {
        throw std::logic_error("hierarchical_refill: active sets are not nested");
      }
    }
  }

  FeaturePyramid pyramid;
  pyramid.grid_h = grid_h;
  pyramid.grid_w = grid_w;
  pyramid.levels = bases;
  for (std::size_t s = num_stages - 1; s-- > 0;) {
    for (std::size_t pos : active[s + 1].slots) {
      pyramid.levels[s].set_row(pos, pyramid.levels[s + 1].row(pos));
    }
  }
  return pyramid;
}

Matrix bilinear_upsample(const Matrix& grid, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("bilinear_upsample: zero factor");
  if (grid.empty()) throw std::invalid_argument("bilinear_upsample: empty grid");
  const std::size_t out_h = grid.rows() * factor;
  const std::size_t out_w = grid.cols() * factor;
  Matrix out(out_h, out_w);
  const double inv = 1.0 / static_cast<double>(factor);
  for (std::size_t y = 0; y < out_h; ++y) {
    double sy = (static_cast<double>(y) + 0.5) * inv - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(grid.rows() - 1));
    const std::size_t y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, grid.rows() - 1);
    const double wy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      double sx = (static_cast<double>(x) + 0.5) * inv - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(grid.cols() - 1));
      const std::size_t x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, grid.cols() - 1);
      const double wx = sx - static_cast<double>(x0);
      const double top = (1.0 - wx) * grid(y0, x0) + wx * grid(y0, x1);
      const double bottom = (1.0 - wx) * grid(y1, x0) + wx * grid(y1, x1);
      out(y, x) = (1.0 - wy) * top + wy * bottom;
    }
  }
  return out;
}

PredictionMap decode(const FeaturePyramid& pyramid, const DecoderWeights& weights,
                     std::size_t patch_size) {
  const std::size_t num_levels = pyramid.levels.size();
  if (num_levels == 0) throw std::invalid_argument("decode: empty pyramid");
  if (weights.level_weight.size() != num_levels ||
      weights.level_bias.size() != num_levels) {
    throw std::invalid_argument("decode: one projection per pyramid level required");
  }
  const std::size_t grid_size = pyramid.grid_h * pyramid.grid_w;
  const std::size_t dim = weights.out_weight.size();

  Matrix fused(grid_size, dim);
  for (std::size_t s = 0; s < num_levels; ++s) {
    const Matrix projected = matmul(pyramid.levels[s], weights.level_weight[s]);
    if (projected.cols() != dim || weights.level_bias[s].size() != dim) {
      throw std::invalid_argument("decode: level projection width != decoder dim");
    }
    for (std::size_t i = 0; i < grid_size; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        fused(i, j) += projected(i, j) + weights.level_bias[s][j];
      }
    }
  }

  Matrix grid(pyramid.grid_h, pyramid.grid_w);
  for (std::size_t i = 0; i < grid_size; ++i) {
    double logit = weights.out_bias;
    for (std::size_t j = 0; j < dim; ++j) logit += fused(i, j) * weights.out_weight[j];
    grid.data()[i] = sigmoid_temp(logit, 1.0);
  }

  const Matrix full = bilinear_upsample(grid, patch_size);
  PredictionMap map;
  map.height = full.rows();
  map.width = full.cols();
  map.values = full.data();
  return map;
}

std::vector<double> confidence_heatmap(const StageRecord& record, std::size_t grid_h,
                                       std::size_t grid_w) {
  const std::size_t grid_size = grid_h * grid_w;
  if (record.prior_fate.size() != grid_size) {
    throw std::invalid_argument("confidence_heatmap: fate vector is not grid sized");
  }
  if (record.scores.size() != record.entering.size()) {
    throw std::invalid_argument("confidence_heatmap: one score per entering token");
  }
  std::vector<double> field(grid_size, 0.0);
  for (std::size_t pos = 0; pos < grid_size; ++pos) {
    if (record.prior_fate[pos] == PositionFate::pruned_high) field[pos] = 1.0;
  }
  for (std::size_t t = 0; t < record.entering.size(); ++t) {
    field[record.entering.slots[t]] = record.scores[t];
  }
  return field;
}

}  // namespace catp
