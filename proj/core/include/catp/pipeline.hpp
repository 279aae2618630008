#pragma once

#include <vector>

#include "catp/compensation.hpp"
#include "catp/cost_model.hpp"
#include "catp/encoder.hpp"
#include "catp/image.hpp"
#include "catp/pruning.hpp"
#include "catp/refill.hpp"
#include "catp/weights.hpp"

namespace catp {

struct PipelineRunResult {
  PredictionMap prediction;
  FeaturePyramid pyramid;
  std::vector<StageRecord> records;           // one per boundary, stages 2..S
  std::vector<StageTokenCount> stage_counts;  // one per stage
  CostReport cost;
};

// Full forward pass: embed, run stages, score/partition/compensate/gather at
// each boundary, refill the pyramid, decode, and price the whole thing.
PipelineRunResult run_pipeline(const Image& image, const EncoderConfig& config,
                               const PruneThresholds& thresholds,
                               CompensationMode mode, const ModelWeights& weights);

// Boundary scores from a pass with pruning disabled (theta_d=0, theta_u=1),
// one full-grid vector per boundary. Input for trace-based threshold sweeps.
ScoreTraces record_score_traces(const Image& image, const EncoderConfig& config,
                                double tau, const ModelWeights& weights);

}  // namespace catp
