#include <benchmark/benchmark.h>

#include <vector>

#include "gopforge/layers.hpp"
#include "gopforge/linalg.hpp"
#include "gopforge/loss.hpp"
#include "gopforge/operators.hpp"
#include "gopforge/rng.hpp"
#include "gopforge/search.hpp"
#include "gopforge/training.hpp"

using namespace gopforge;

namespace {

Matrix uniform(std::size_t rows, std::size_t cols, std::uint64_t stream) {
  RngStream rng(7, stream);
  return Matrix(rows, cols, rng_uniform(rng, -1.0, 1.0, rows * cols));
}

GopLayerParams layer(std::size_t fan_in, std::size_t fan_out, std::size_t opset) {
  RngStream init(7, 100 + opset);
  return make_gop_layer(fan_in, fan_out, opset_at(opset), init);
}

// Opset index from the benchmark argument: 0 is the perceptron, 5 a
// maximum-pooled set, 71 the most expensive nodal operator.
void GopForwardPass(benchmark::State& state) {
  const GopLayerParams p = layer(40, 40, static_cast<std::size_t>(state.range(0)));
  const Matrix x = uniform(32, 40, 1);
  for (auto _ : state) benchmark::DoNotOptimize(gop_forward(p, x));
  state.SetItemsProcessed(state.iterations() * 32);
  state.SetLabel(to_string(p.opset));
}
BENCHMARK(GopForwardPass)->Arg(0)->Arg(9)->Arg(71);

void GopBackwardPass(benchmark::State& state) {
  const GopLayerParams p = layer(40, 40, static_cast<std::size_t>(state.range(0)));
  const Matrix x = uniform(32, 40, 1);
  const Matrix up = uniform(32, 40, 2);
  const GopForward f = gop_forward(p, x);
  for (auto _ : state) benchmark::DoNotOptimize(gop_backward(p, f.cache, up));
  state.SetItemsProcessed(state.iterations() * 32);
  state.SetLabel(to_string(p.opset));
}
BENCHMARK(GopBackwardPass)->Arg(0)->Arg(9)->Arg(71);

void SymmetricEigen(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = uniform(2 * n, n, 3);
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < a.rows(); ++k) c(i, j) += a(k, i) * a(k, j);
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig(c));
}
BENCHMARK(SymmetricEigen)->Arg(10)->Arg(40)->Arg(80);

TrainConfig one_epoch() {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.loss = LossKind::kCrossEntropy;
  return cfg;
}

void ShlnEpoch(benchmark::State& state) {
  const Matrix x = uniform(1200, 20, 4);
  std::vector<std::size_t> labels(1200);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 4;
  const Matrix y = one_hot(labels, 4);
  const TrainConfig cfg = one_epoch();
  for (auto _ : state) {
    RngStream init(1, 1);
    RngStream rng(1, 2);
    const GopLayerParams h = make_gop_layer(20, 40, opset_at(1), init);
    const LinearLayerParams o = make_linear_layer(40, 4, OutputActivation::kSoftmax, init);
    benchmark::DoNotOptimize(train_shln(h, o, std::nullopt, TrainData{x, y}, cfg, rng));
  }
  state.SetItemsProcessed(state.iterations() * 1200);
}
BENCHMARK(ShlnEpoch)->Unit(benchmark::kMillisecond);

// One-epoch sweep over the whole library; the argument is the worker count.
void LibrarySweep(benchmark::State& state) {
  const Matrix x = uniform(300, 10, 5);
  std::vector<std::size_t> labels(300);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 3;
  const Matrix y = one_hot(labels, 3);
  const TrainConfig cfg = one_epoch();
  std::vector<CandidateJob> jobs;
  for (std::size_t i = 0; i < kLibrarySize; ++i) jobs.push_back({i, opset_at(i), i});
  const auto train = [&](const CandidateJob& job) {
    RngStream init(3, job.rng_stream_id);
    RngStream rng = init.split(2);
    const GopLayerParams h = make_gop_layer(10, 12, job.opset, init);
    const LinearLayerParams o = make_linear_layer(12, 3, OutputActivation::kSoftmax, init);
    const TrainResult r = train_shln(h, o, std::nullopt, TrainData{x, y}, cfg, rng);
    return CandidateOutcome<double>{r.stats.final_loss, r.stats.final_loss};
  };
  for (auto _ : state)
    benchmark::DoNotOptimize(run_sweep<double>(jobs, train, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(LibrarySweep)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
