#include <memory>

#include <benchmark/benchmark.h>

#include "safexfer/case_studies.hpp"
#include "safexfer/certify.hpp"
#include "safexfer/controllers.hpp"
#include "safexfer/mlp.hpp"
#include "safexfer/rng.hpp"
#include "safexfer/transfer.hpp"

namespace sx = safexfer;

namespace {

Eigen::MatrixXd random_batch(int dim, int n) {
  sx::Rng rng(1);
  Eigen::MatrixXd xs(dim, n);
  for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] = rng.uniform(-1, 1);
  return xs;
}

void BM_ForwardBatch(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const auto net = sx::Mlp::he_uniform({2, width, width, 1}, 0);
  const auto xs = random_batch(2, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(sx::forward_batch(net, xs));
  state.SetItemsProcessed(state.iterations() * xs.cols());
}
BENCHMARK(BM_ForwardBatch)->Arg(32)->Arg(200);

void BM_BackwardBatch(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const auto net = sx::Mlp::he_uniform({2, width, width, 1}, 0);
  const auto xs = random_batch(2, 1024);
  const Eigen::MatrixXd up = Eigen::MatrixXd::Ones(1, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(sx::backward_batch(net, xs, up));
  state.SetItemsProcessed(state.iterations() * xs.cols());
}
BENCHMARK(BM_BackwardBatch)->Arg(32)->Arg(200);

void BM_TrainingLoss(benchmark::State& state) {
  const auto d = sx::load_benchmark("pendulum", sx::Scale::kDesk);
  const auto net = sx::Mlp::he_uniform({2, 32, 32, 1}, 0, 0.2);
  const auto xs = random_batch(2, 1024) * 0.7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sx::training_loss(d.source, d.source_controller, d.target, net, xs));
  }
  state.SetItemsProcessed(state.iterations() * xs.cols());
}
BENCHMARK(BM_TrainingLoss);

void BM_GridSweep(benchmark::State& state) {
  const auto d = sx::load_benchmark("dc-motor", sx::Scale::kDesk);
  const auto g = sx::build_grid(d.source.state_box, d.epsilon());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sx::verify_cbc_on_grid(d.source_cbc, d.source, d.source_controller, d.spec, g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_GridSweep)->Unit(benchmark::kMillisecond);

void BM_Mismatch(benchmark::State& state) {
  const auto d = sx::load_benchmark("dc-motor", sx::Scale::kDesk);
  const auto g = sx::build_grid(d.source.state_box, d.epsilon());
  const auto net = std::make_shared<const sx::Mlp>(sx::Mlp::he_uniform({2, 32, 32, 1}, 0, 0.2));
  const auto k_hat = sx::make_neural_controller(net, d.target.input_box);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sx::mismatch_E(d.source, d.source_controller, d.target, k_hat, g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_Mismatch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
