#include <benchmark/benchmark.h>

#include "d2s/nn/model.hpp"
#include "d2s/sparse/csr.hpp"
#include "d2s/stream/stream.hpp"

namespace {

d2s::ModelConfig bench_model() {
  d2s::ModelConfig cfg;
  return cfg;  // the default benchmark topology
}

d2s::StreamConfig bench_stream() {
  d2s::StreamConfig cfg;
  return cfg;
}

void BM_ModelForward(benchmark::State& state) {
  const auto mcfg = bench_model();
  d2s::RecModel model = d2s::build_model(mcfg, 11);
  const d2s::StreamGenerator stream(bench_stream(), d2s::DriftSchedule{});
  const d2s::Batch batch = stream.batch(0, 250);
  d2s::ForwardCache cache;
  for (auto _ : state) {
    const auto& probs = d2s::forward(model, batch, cache);
    benchmark::DoNotOptimize(probs.data());
  }
  state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_ModelForward);

void BM_TrainStep(benchmark::State& state) {
  const auto mcfg = bench_model();
  d2s::RecModel model = d2s::build_model(mcfg, 11);
  const d2s::StreamGenerator stream(bench_stream(), d2s::DriftSchedule{});
  const d2s::Batch batch = stream.batch(0, 250);
  d2s::ForwardCache cache;
  for (auto _ : state) {
    benchmark::DoNotOptimize(d2s::train_step(model, batch, cache));
  }
  state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_TrainStep);

void BM_StreamBatch(benchmark::State& state) {
  const d2s::StreamGenerator stream(bench_stream(), d2s::DriftSchedule{});
  uint64_t t = 0;
  for (auto _ : state) {
    const d2s::Batch b = stream.batch(t, 250);
    benchmark::DoNotOptimize(b.labels.data());
    t += 250;
  }
  state.SetItemsProcessed(state.iterations() * 250);
}
BENCHMARK(BM_StreamBatch);

void BM_SparseModelForward(benchmark::State& state) {
  const auto mcfg = bench_model();
  d2s::RecModel model = d2s::build_model(mcfg, 11, /*masked=*/true);
  const d2s::StreamGenerator stream(bench_stream(), d2s::DriftSchedule{});
  const d2s::Batch batch = stream.batch(0, 250);
  const d2s::SparseModel sparse = d2s::lower_to_sparse(model);
  for (auto _ : state) {
    const d2s::Vector probs = d2s::sparse_forward(sparse, batch);
    benchmark::DoNotOptimize(probs.data());
  }
  state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_SparseModelForward);

}  // namespace
