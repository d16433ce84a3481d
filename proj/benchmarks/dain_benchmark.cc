#include <cstdint>
#include <vector>

#include "benchmark/benchmark.h"
#include "dain/augmentation.h"
#include "dain/entity_importance.h"
#include "dain/influence.h"
#include "dain/model.h"
#include "dain/tensor.h"
#include "dain/trainer.h"

namespace dain {
namespace {

CheckpointSet MakeCheckpoints(const Dims& dims, int k) {
  const TrainConfig c = TrainConfig::desk();
  CheckpointSet set;
  for (int i = 0; i < k; ++i) {
    set.snapshots.emplace_back(dims, c.embedding_len, c.layer_sizes, 100 + i);
    set.step_sizes.push_back(c.checkpoint_step_size);
    set.epochs.push_back(i + 1);
  }
  return set;
}

DatasetSplit MakeSplit(std::size_t nnz) {
  return split_dataset(generate_synthetic({{30, 30, 30}, nnz, 5, 0.01, 11}), 11);
}

void BM_Predict(benchmark::State& state) {
  const TrainConfig c = TrainConfig::desk();
  const CompletionModel model({30, 30, 30}, c.embedding_len, c.layer_sizes, 1);
  auto ws = model.make_workspace();
  const Index cell{3, 14, 15};
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(cell, ws));
}
BENCHMARK(BM_Predict);

void BM_AccumulateGradient(benchmark::State& state) {
  const TrainConfig c = TrainConfig::desk();
  const CompletionModel model({30, 30, 30}, c.embedding_len, c.layer_sizes, 1);
  auto ws = model.make_workspace();
  std::vector<double> grad(model.parameters().size());
  const Index cell{3, 14, 15};
  for (auto _ : state) benchmark::DoNotOptimize(model.accumulate_gradient(cell, 0.5, grad, ws));
}
BENCHMARK(BM_AccumulateGradient);

// Validation sums precomputed once; cost is linear in |train|.
void BM_CellImportance(benchmark::State& state) {
  const DatasetSplit split = MakeSplit(static_cast<std::size_t>(state.range(0)));
  const CheckpointSet set = MakeCheckpoints(split.dims, 5);
  const auto sums = validation_gradient_sums(set, split.val);
  for (auto _ : state) benchmark::DoNotOptimize(cell_importance(set, split.train, sums));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(split.train.size()));
}
BENCHMARK(BM_CellImportance)->Arg(1350)->Arg(5400)->Unit(benchmark::kMillisecond);

// Pairwise reference; cost is linear in |train| * |val|.
void BM_NaiveCellImportance(benchmark::State& state) {
  const DatasetSplit split = MakeSplit(static_cast<std::size_t>(state.range(0)));
  const CheckpointSet set = MakeCheckpoints(split.dims, 5);
  for (auto _ : state) benchmark::DoNotOptimize(naive_cell_importance(set, split.train, split.val));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(split.train.size()));
}
BENCHMARK(BM_NaiveCellImportance)->Arg(1350)->Unit(benchmark::kMillisecond);

void BM_SampleAugmentationCells(benchmark::State& state) {
  const DatasetSplit split = MakeSplit(1350);
  const CheckpointSet set = MakeCheckpoints(split.dims, 1);
  const auto cit =
      cell_importance(set, split.train, validation_gradient_sums(set, split.val));
  const EntityImportance importance = aggregate_entity_importance(cit, split.dims);
  const CellSet observed = observed_cells(split);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_augmentation_cells(importance, n, observed, ++seed));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleAugmentationCells)->Arg(100)->Arg(486)->Arg(4000);

}  // namespace
}  // namespace dain

BENCHMARK_MAIN();
