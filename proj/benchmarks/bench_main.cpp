#include <benchmark/benchmark.h>

#include "acnnl/im2col.hpp"
#include "acnnl/network.hpp"
#include "acnnl/rng.hpp"
#include "acnnl/ridge.hpp"

namespace {

acnnl::Tensor3 random_tensor(acnnl::Rng& rng, std::size_t c, std::size_t w, std::size_t h) {
  acnnl::Tensor3 t(c, w, h);
  for (auto& v : t.data()) v = rng.uniform();
  return t;
}

acnnl::Mat random_mat(acnnl::Rng& rng, std::size_t r, std::size_t c) {
  acnnl::Mat m(r, c);
  for (auto& v : m.data()) v = rng.normal();
  return m;
}

// args: channels, side, kernel
void BM_Im2col(benchmark::State& state) {
  acnnl::Rng rng(1);
  const auto c = static_cast<std::size_t>(state.range(0)), side = static_cast<std::size_t>(state.range(1)),
             k = static_cast<std::size_t>(state.range(2));
  const auto x = random_tensor(rng, c, side, side);
  for (auto _ : state) benchmark::DoNotOptimize(acnnl::im2col(x, k));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(c * k * k * (side - k + 1) * (side - k + 1) * 8));
}
BENCHMARK(BM_Im2col)->Args({1, 28, 5})->Args({16, 12, 3})->Args({3, 32, 5})->Args({64, 16, 3});

// args: design width, target width, rows per batch
void BM_GramAccumulate(benchmark::State& state) {
  acnnl::Rng rng(2);
  const auto d = static_cast<std::size_t>(state.range(0)), j = static_cast<std::size_t>(state.range(1)),
             rows = static_cast<std::size_t>(state.range(2));
  const auto x = random_mat(rng, rows, d), z = random_mat(rng, rows, j);
  acnnl::GramAccumulator acc(d, j);
  for (auto _ : state) acc.accumulate(x, z);
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows));
}
BENCHMARK(BM_GramAccumulate)->Args({25, 16, 4096})->Args({144, 32, 4096})->Args({288, 64, 4096})->Args({1152, 256, 4096});

void BM_Solve(benchmark::State& state) {
  acnnl::Rng rng(3);
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto x = random_mat(rng, 2 * d, d), z = random_mat(rng, 2 * d, 10);
  acnnl::GramAccumulator acc(d, 10);
  acc.accumulate(x, z);
  for (auto _ : state) benchmark::DoNotOptimize(acnnl::solve_layer(acc, 1.0));
}
BENCHMARK(BM_Solve)->Arg(144)->Arg(576)->Arg(2304);

// args: C, input channels, side
void BM_Forward(benchmark::State& state) {
  acnnl::Rng rng(4);
  const auto c = static_cast<std::size_t>(state.range(0)), ch = static_cast<std::size_t>(state.range(1)),
             side = static_cast<std::size_t>(state.range(2));
  acnnl::TrainedNetwork net;
  net.spec = acnnl::build_cnn5(c, {ch, side, side}, 10);
  for (const auto& p : acnnl::plan_network(net.spec)) net.weights.push_back(random_mat(rng, p.weight_rows, p.weight_cols));
  const auto x = random_tensor(rng, ch, side, side);
  for (auto _ : state) benchmark::DoNotOptimize(acnnl::forward(net, x));
}
BENCHMARK(BM_Forward)->Args({16, 1, 28})->Args({32, 1, 28})->Args({32, 3, 32});

}  // namespace
BENCHMARK_MAIN();
