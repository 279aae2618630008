#include "catp/cost_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace catp {

namespace {

std::vector<SweepEntry> sweep_impl(
    const ThresholdGrid& grid, const EncoderConfig& config, CompensationMode mode,
    double tau,
    const std::function<std::vector<StageTokenCount>(const PruneThresholds&)>& counts_for) {
  config.validate();
  std::vector<SweepEntry> entries;
  entries.reserve(grid.size());
  for (const auto& [theta_d, theta_u] : grid) {
    SweepEntry entry;
    entry.theta_d = theta_d;
    entry.theta_u = theta_u;
    const PruneThresholds thresholds{theta_d, theta_u, tau};
    try {
      thresholds.validate();
      entry.stage_counts = counts_for(thresholds);
      entry.report = pipeline_flops(config, entry.stage_counts, mode);
      entry.valid = true;
    } catch (const std::invalid_argument& err) {
      entry.valid = false;
      entry.diagnostic = err.what();
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace

std::uint64_t layer_flops(std::size_t n_tokens, std::size_t embed_dim,
                          std::size_t num_heads, double mlp_ratio) {
  if (embed_dim == 0 || num_heads == 0 || !(mlp_ratio > 0.0)) {
    throw std::invalid_argument("layer_flops: dimensions must be positive");
  }
  const std::uint64_t n = n_tokens;
  const std::uint64_t c = embed_dim;
  const std::uint64_t hidden =
      static_cast<std::uint64_t>(std::llround(mlp_ratio * static_cast<double>(embed_dim)));
  return 4 * n * c * c + 2 * n * n * c + 2 * n * c * hidden;
}

CostReport pipeline_flops(const EncoderConfig& config,
                          std::span<const StageTokenCount> counts,
                          CompensationMode mode) {
  config.validate();
  if (counts.size() != config.num_stages()) {
    throw std::invalid_argument("pipeline_flops: one token count per stage required");
  }
  if (mode == CompensationMode::none) {
    for (const StageTokenCount& count : counts) {
      if (count.prototypes != 0) {
        throw std::invalid_argument(
            "pipeline_flops: prototype counts must be zero without compensation");
      }
    }
  }

  CostReport report;
  for (std::size_t stage = 1; stage <= config.num_stages(); ++stage) {
    const std::size_t tokens = counts[stage - 1].total();
    for (std::size_t layer = config.stage_first_layer(stage);
         layer <= config.stage_last_layer(stage); ++layer) {
      report.per_layer.push_back(
          {layer, tokens,
           layer_flops(tokens, config.embed_dim, config.num_heads, config.mlp_ratio)});
    }
  }
  for (std::size_t boundary = 1; boundary < config.num_stages(); ++boundary) {
    report.scoring_overhead +=
        2 * static_cast<std::uint64_t>(counts[boundary - 1].patches) * config.embed_dim;
  }
  report.total_pruned = report.scoring_overhead;
  for (const LayerCost& cost : report.per_layer) report.total_pruned += cost.flops;
  report.total_baseline =
      config.num_layers * layer_flops(config.num_patches() + 1, config.embed_dim,
                                      config.num_heads, config.mlp_ratio);
  report.reduction_ratio = 1.0 - static_cast<double>(report.total_pruned) /
                                     static_cast<double>(report.total_baseline);
  return report;
}

std::vector<StageTokenCount> simulate_stage_counts(const ScoreTraces& traces,
                                                   const PruneThresholds& thresholds,
                                                   CompensationMode mode,
                                                   std::size_t num_patches) {
  thresholds.validate();
  for (const auto& trace : traces.boundary_scores) {
    if (trace.size() != num_patches) {
      throw std::invalid_argument("simulate_stage_counts: trace does not cover the grid");
    }
  }

  std::vector<StageTokenCount> counts(traces.boundary_scores.size() + 1);
  IndexMap active;
  active.slots.resize(num_patches);
  std::iota(active.slots.begin(), active.slots.end(), std::size_t{0});
  counts[0] = {num_patches, 0};

  for (std::size_t boundary = 0; boundary < traces.boundary_scores.size(); ++boundary) {
    const auto& trace = traces.boundary_scores[boundary];
    std::vector<double> scores(active.size());
    for (std::size_t t = 0; t < active.size(); ++t) scores[t] = trace[active.slots[t]];

    Partition partition = partition_tokens(scores, thresholds);
    if (partition.mid.empty()) {
      move_to_mid(partition, fallback_keep_slot(scores, active));
    }

    std::size_t prototypes = 0;
    if (mode != CompensationMode::none) {
      prototypes = (partition.low.empty() ? 0 : 1) + (partition.high.empty() ? 0 : 1);
    }

    IndexMap surviving;
    surviving.slots.reserve(partition.mid.size());
    for (std::size_t t : partition.mid) surviving.slots.push_back(active.slots[t]);
    active = std::move(surviving);
    counts[boundary + 1] = {active.size(), prototypes};
  }
  return counts;
}

std::vector<SweepEntry> threshold_sweep(const ScoreTraces& traces,
                                        const ThresholdGrid& grid,
                                        const EncoderConfig& config,
                                        CompensationMode mode, double tau) {
  return sweep_impl(grid, config, mode, tau, [&](const PruneThresholds& thresholds) {
    return simulate_stage_counts(traces, thresholds, mode, config.num_patches());
  });
}

std::vector<SweepEntry> threshold_sweep(const StageCountRunner& runner,
                                        const ThresholdGrid& grid,
                                        const EncoderConfig& config,
                                        CompensationMode mode, double tau) {
  return sweep_impl(grid, config, mode, tau, runner);
}

}  // namespace catp
