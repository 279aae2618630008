#include <benchmark/benchmark.h>

#include "catp/encoder.hpp"
#include "catp/image_io.hpp"
#include "catp/numerics.hpp"
#include "catp/pipeline.hpp"
#include "catp/pruning.hpp"
#include "catp/refill.hpp"
#include "catp/rng.hpp"
#include "catp/weights.hpp"

namespace {

using namespace catp;

void BM_matmul(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix a = gaussian_init(rng, n, n, 1.0);
  const Matrix b = gaussian_init(rng, n, n, 1.0);
  for (auto _ : state) {
    Matrix c = matmul(a, b);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_matmul)->Arg(17)->Arg(64)->Arg(128);

void BM_transformer_layer(benchmark::State& state) {
  const EncoderConfig cfg;
  const ModelWeights weights = resolve_weights({}, cfg, 3).weights;
  Rng rng(4);
  TokenSequence seq;
  seq.cls = gaussian_init(rng, 1, cfg.embed_dim, 1.0).data();
  seq.patches = gaussian_init(rng, cfg.num_patches(), cfg.embed_dim, 1.0);
  seq.index_map.slots.resize(cfg.num_patches());
  for (std::size_t i = 0; i < cfg.num_patches(); ++i) seq.index_map.slots[i] = i;
  for (auto _ : state) {
    TokenSequence out = transformer_layer(seq, weights.layers[0], cfg.num_heads);
    benchmark::DoNotOptimize(out.patches.data().data());
  }
}
BENCHMARK(BM_transformer_layer);

void BM_partition_tokens(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  std::vector<double> scores(n);
  for (double& s : scores) s = rng.next_unit_open();
  const PruneThresholds th{0.3, 0.7, 10.0};
  for (auto _ : state) {
    Partition part = partition_tokens(scores, th);
    benchmark::DoNotOptimize(part.mid.data());
  }
}
BENCHMARK(BM_partition_tokens)->Arg(16)->Arg(256)->Arg(4096);

void BM_hierarchical_refill(benchmark::State& state) {
  const EncoderConfig cfg;
  const ModelWeights weights = resolve_weights({}, cfg, 6).weights;
  const Image image = synthetic_image(64, 64, 3, 7);
  const PipelineRunResult run = run_pipeline(
      image, cfg, PruneThresholds{0.45, 0.55, 10.0}, CompensationMode::weighted,
      weights);
  std::vector<IndexMap> actives;
  IndexMap full;
  full.slots.resize(cfg.num_patches());
  for (std::size_t i = 0; i < cfg.num_patches(); ++i) full.slots[i] = i;
  actives.push_back(full);
  for (const StageRecord& record : run.records) actives.push_back(record.surviving);
  for (auto _ : state) {
    FeaturePyramid pyramid =
        hierarchical_refill(run.pyramid.levels, actives, cfg.grid_h(), cfg.grid_w());
    benchmark::DoNotOptimize(pyramid.levels.back().data().data());
  }
}
BENCHMARK(BM_hierarchical_refill);

void BM_run_pipeline(benchmark::State& state) {
  const EncoderConfig cfg;
  const ModelWeights weights = resolve_weights({}, cfg, 8).weights;
  const Image image = synthetic_image(64, 64, 3, 9);
  const PruneThresholds th{0.45, 0.55, 10.0};
  for (auto _ : state) {
    PipelineRunResult result =
        run_pipeline(image, cfg, th, CompensationMode::weighted, weights);
    benchmark::DoNotOptimize(result.prediction.values.data());
  }
}
BENCHMARK(BM_run_pipeline);

}  // namespace

BENCHMARK_MAIN();
