#include "catp/pipeline.hpp"

#include <stdexcept>
#include <utility>

#include "catp/image_io.hpp"

namespace catp {

namespace {

void check_weight_shapes(const ModelWeights& weights, const EncoderConfig& config) {
  if (weights.layers.size() != config.num_layers) {
    throw std::invalid_argument("run_pipeline: weights carry a different layer count");
  }
  if (weights.scoring.size() + 1 != config.num_stages()) {
    throw std::invalid_argument("run_pipeline: one scoring head per boundary required");
  }
  if (weights.decoder.level_weight.size() != config.num_stages()) {
    throw std::invalid_argument("run_pipeline: one decoder projection per stage required");
  }
}

// Rows of `patches` at the partition subset's local indices, with their scores.
std::pair<Matrix, std::vector<double>> take_subset(const Matrix& patches,
                                                   std::span<const double> scores,
                                                   const std::vector<std::size_t>& subset) {
  Matrix features(subset.size(), patches.cols());
  std::vector<double> subset_scores(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    features.set_row(i, patches.row(subset[i]));
    subset_scores[i] = scores[subset[i]];
  }
  return {std::move(features), std::move(subset_scores)};
}

}  // namespace

PipelineRunResult run_pipeline(const Image& image, const EncoderConfig& config,
                               const PruneThresholds& thresholds,
                               CompensationMode mode, const ModelWeights& weights) {
  config.validate();
  thresholds.validate();
  check_weight_shapes(weights, config);
  if (image.height != config.image_h || image.width != config.image_w) {
    throw std::invalid_argument("run_pipeline: image size does not match config");
  }
  const Image input = convert_channels(image, config.in_channels);

  const Matrix tokens =
      patch_embed(input, weights.patch_proj, weights.patch_bias, config.patch_size);
  TokenSequence seq = assemble_input(tokens, weights.cls, weights.pos);

  const std::size_t num_stages = config.num_stages();
  Matrix buffer = seq.patches;
  std::vector<Matrix> bases(num_stages);
  std::vector<IndexMap> active(num_stages);
  std::vector<PositionFate> fate(config.num_patches(), PositionFate::active);

  PipelineRunResult result;
  result.stage_counts.resize(num_stages);
  result.records.reserve(num_stages - 1);

  for (std::size_t stage = 1; stage <= num_stages; ++stage) {
    result.stage_counts[stage - 1] = {seq.patches.rows(), seq.prototypes.size()};
    seq = run_stage(seq, config, stage, weights.layers);
    buffer = snapshot_dense(buffer, seq);
    bases[stage - 1] = buffer;
    active[stage - 1] = seq.index_map;
    if (stage == num_stages) break;

    StageRecord record;
    record.stage = stage + 1;
    record.prior_fate = fate;
    record.entering = seq.index_map;
    record.scores = score_tokens(seq.patches, weights.scoring[stage - 1], thresholds.tau);
    record.partition = partition_tokens(record.scores, thresholds);
    if (record.partition.mid.empty()) {
      move_to_mid(record.partition, fallback_keep_slot(record.scores, seq.index_map));
      record.fallback_applied = true;
    }
    record.mask = make_mask(record.partition, record.scores.size());

    if (mode != CompensationMode::none) {
      const auto [low_feats, low_scores] =
          take_subset(seq.patches, record.scores, record.partition.low);
      const auto [high_feats, high_scores] =
          take_subset(seq.patches, record.scores, record.partition.high);
      if (mode == CompensationMode::weighted) {
        record.proto_low = aggregate_low(low_feats, low_scores);
        record.proto_high = aggregate_high(high_feats, high_scores);
      } else {
        record.proto_low = aggregate_average(low_feats, low_scores, ProtoOrigin::low);
        record.proto_high = aggregate_average(high_feats, high_scores, ProtoOrigin::high);
      }
    }

    for (const std::size_t t : record.partition.low) {
      fate[record.entering.slots[t]] = PositionFate::pruned_low;
    }
    for (const std::size_t t : record.partition.high) {
      fate[record.entering.slots[t]] = PositionFate::pruned_high;
    }

    const TokenSequence mid = gather_retained(seq, record.mask);
    record.surviving = mid.index_map;
    seq = rebuild_sequence(mid.cls, mid.patches, mid.index_map, record.proto_low,
                           record.proto_high);
    result.records.push_back(std::move(record));
  }

  result.pyramid = hierarchical_refill(bases, active, config.grid_h(), config.grid_w());
  result.prediction = decode(result.pyramid, weights.decoder, config.patch_size);
  result.cost = pipeline_flops(config, result.stage_counts, mode);
  return result;
}

ScoreTraces record_score_traces(const Image& image, const EncoderConfig& config,
                                double tau, const ModelWeights& weights) {
  const PruneThresholds no_prune{0.0, 1.0, tau};
  const PipelineRunResult result =
      run_pipeline(image, config, no_prune, CompensationMode::none, weights);
  ScoreTraces traces;
  traces.boundary_scores.reserve(result.records.size());
  for (const StageRecord& record : result.records) {
    traces.boundary_scores.push_back(record.scores);
  }
  return traces;
}

}  // namespace catp
