#pragma once

#include <cstddef>
#include <vector>

#include "catp/image.hpp"
#include "catp/matrix.hpp"
#include "catp/pruning.hpp"

namespace catp {

// S aligned dense T x C maps; level s holds the deepest features available
// for every grid position at that stage.
struct FeaturePyramid {
  std::vector<Matrix> levels;
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
};

struct PredictionMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // row-major, in [0, 1]

  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  Image to_image() const;
};

// Per-level linear maps C -> D, summed, then projected D -> 1.
struct DecoderWeights {
  std::vector<Matrix> level_weight;             // S entries, C x D
  std::vector<std::vector<double>> level_bias;  // S entries, length D
  std::vector<double> out_weight;               // length D
  double out_bias = 0.0;
};

std::size_t decoder_dim(std::size_t embed_dim);  // max(C/2, 8)

// Copy of `running_buffer` with the rows at the stage output's active grid
// positions overwritten by its patch features. Prototypes and cls have no
// grid position and are ignored.
Matrix snapshot_dense(const Matrix& running_buffer, const TokenSequence& stage_output);

// Refilling recursion: iterate s from S-1 down to 1, overwriting
// level-s rows at positions active in stage s+1 with the already-refilled
// level s+1 rows. Requires active sets nested: active[s+1] subset of active[s].
FeaturePyramid hierarchical_refill(const std::vector<Matrix>& bases,
                                   const std::vector<IndexMap>& active,
                                   std::size_t grid_h, std::size_t grid_w);

// Separable bilinear interpolation by an integer factor, sample centers
// aligned to pixel centers (corner alignment off). Preserves value bounds.
Matrix bilinear_upsample(const Matrix& grid, std::size_t factor);

PredictionMap decode(const FeaturePyramid& pyramid, const DecoderWeights& weights,
                     std::size_t patch_size);

// Scatters the record's scores to the entering tokens' grid positions.
// Positions pruned at earlier boundaries render as 0 (low) or 1 (high).
std::vector<double> confidence_heatmap(const StageRecord& record, std::size_t grid_h,
                                       std::size_t grid_w);

}  // namespace catp
