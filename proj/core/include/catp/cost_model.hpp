#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "catp/compensation.hpp"
#include "catp/encoder.hpp"
#include "catp/pruning.hpp"

namespace catp {

struct LayerCost {
  std::size_t layer = 0;  // 1-based
  std::size_t tokens = 0;
  std::uint64_t flops = 0;
};

struct CostReport {
  std::vector<LayerCost> per_layer;
  std::uint64_t scoring_overhead = 0;
  std::uint64_t total_pruned = 0;
  std::uint64_t total_baseline = 0;
  double reduction_ratio = 0.0;  // 1 - pruned / baseline
};

// Sequence composition during one stage: patch tokens plus cls plus the
// prototypes appended at the preceding boundary.
struct StageTokenCount {
  std::size_t patches = 0;
  std::size_t prototypes = 0;

  std::size_t total() const { return patches + 1 + prototypes; }
};

// Attention 4nC^2 + 2n^2C plus MLP 2nC*hidden; each matrix product counts
// its dimension product, biases and layer norms are ignored as sub-percent.
std::uint64_t layer_flops(std::size_t n_tokens, std::size_t embed_dim,
                          std::size_t num_heads, double mlp_ratio);

// Sums layer_flops over all layers at the owning stage's token count and
// charges 2*N*C per boundary for scoring. Baseline: T+1 tokens everywhere,
// no scoring. Counts must be consistent with the mode (none => 0 prototypes).
CostReport pipeline_flops(const EncoderConfig& config,
                          std::span<const StageTokenCount> counts,
                          CompensationMode mode);

// Confidence scores recorded at every boundary of an unpruned pass, one
// vector per boundary covering the full grid.
struct ScoreTraces {
  std::vector<std::vector<double>> boundary_scores;
};

// Replays partitioning over recorded traces for the given thresholds and
// reports the resulting per-stage sequence composition. The empty-mid
// fallback applies exactly as in the live pipeline.
std::vector<StageTokenCount> simulate_stage_counts(const ScoreTraces& traces,
                                                   const PruneThresholds& thresholds,
                                                   CompensationMode mode,
                                                   std::size_t num_patches);

struct SweepEntry {
  double theta_d = 0.0;
  double theta_u = 0.0;
  bool valid = false;
  std::string diagnostic;  // set when the pair was skipped
  std::vector<StageTokenCount> stage_counts;
  CostReport report;
};

using ThresholdGrid = std::vector<std::pair<double, double>>;

// Sweep over recorded traces (deterministic replay, no forward passes).
std::vector<SweepEntry> threshold_sweep(const ScoreTraces& traces,
                                        const ThresholdGrid& grid,
                                        const EncoderConfig& config,
                                        CompensationMode mode, double tau);

// Sweep that re-runs the pipeline per pair via the supplied runner.
using StageCountRunner = std::function<std::vector<StageTokenCount>(const PruneThresholds&)>;
std::vector<SweepEntry> threshold_sweep(const StageCountRunner& runner,
                                        const ThresholdGrid& grid,
                                        const EncoderConfig& config,
                                        CompensationMode mode, double tau);

}  // namespace catp
