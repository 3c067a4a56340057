#include <benchmark/benchmark.h>

#include "tngd/curvature.hpp"
#include "tngd/second_order.hpp"
#include "tngd/thermo_solver.hpp"

namespace {

using tngd::numerics::DenseMatrix;
using tngd::numerics::DenseVector;
using tngd::numerics::RngStream;

tngd::thermo::DampedLowRankSystem make_system(Eigen::Index n, Eigen::Index rows) {
  RngStream rng(42);
  tngd::thermo::DampedLowRankSystem s;
  s.jacobian = DenseMatrix(rows, n);
  for (Eigen::Index i = 0; i < rows; ++i) {
    s.jacobian.row(i) = tngd::numerics::gaussian_vector(rng, n, 0.0, 1.0 / static_cast<double>(n)).transpose();
  }
  s.loss_hessian = DenseMatrix::Identity(rows, rows);
  s.block_size = 1;
  s.damping = 0.1;
  s.rhs = tngd::numerics::gaussian_vector(rng, n, 0.0, 1.0);
  return s;
}

void BM_OuStep(benchmark::State& state) {
  const auto system = make_system(state.range(0), 64);
  tngd::thermo::OuState ou{DenseVector::Zero(system.dim()), 0.0, RngStream(1)};
  for (auto _ : state) {
    ou = tngd::thermo::ou_step(std::move(ou), system, 0.1, 1e-4);
    benchmark::DoNotOptimize(ou.x.data());
  }
}
BENCHMARK(BM_OuStep)->RangeMultiplier(4)->Range(256, 16384);

void BM_GgnVectorProduct(benchmark::State& state) {
  using namespace tngd::curvature;
  const auto width = state.range(0);
  ModelSpec spec;
  spec.loss = LossHead::SoftmaxCrossEntropy;
  spec.layers = {{32, width, Activation::Tanh}, {width, 10, Activation::Identity}};
  const Network net(spec);
  RngStream rng(3);
  const DenseVector theta = net.init_parameters(rng);
  Batch batch;
  batch.inputs = DenseMatrix(32, 32);
  for (Eigen::Index i = 0; i < 32; ++i) {
    batch.inputs.row(i) = tngd::numerics::gaussian_vector(rng, 32, 0.0, 1.0).transpose();
    batch.labels.push_back(static_cast<std::size_t>(i % 10));
  }
  const DenseVector v = tngd::numerics::gaussian_vector(rng, net.parameter_count(), 0.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.ggn_vector_product(theta, batch, v, 0.01));
  }
  state.counters["N"] = static_cast<double>(net.parameter_count());
}
BENCHMARK(BM_GgnVectorProduct)->RangeMultiplier(4)->Range(16, 1024);

void BM_SolveWoodbury(benchmark::State& state) {
  const auto system = make_system(state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(tngd::second_order::solve_woodbury(system));
}
BENCHMARK(BM_SolveWoodbury)->RangeMultiplier(4)->Range(256, 16384);

void BM_SolveCg(benchmark::State& state) {
  const auto system = make_system(state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(tngd::second_order::solve_cg(system, 50));
}
BENCHMARK(BM_SolveCg)->RangeMultiplier(4)->Range(256, 16384);

void BM_SolveExact(benchmark::State& state) {
  const auto system = make_system(state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(tngd::second_order::solve_exact(system));
}
BENCHMARK(BM_SolveExact)->RangeMultiplier(2)->Range(128, 1024);

void BM_SolveThermo(benchmark::State& state) {
  const auto system = make_system(state.range(0), 64);
  tngd::thermo::TlsConfig config;
  config.analog_time = 10.0;
  config.step_size = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tngd::second_order::solve_thermo(system, config, std::nullopt, RngStream(5)));
  }
}
BENCHMARK(BM_SolveThermo)->RangeMultiplier(4)->Range(256, 4096);

}  // namespace

BENCHMARK_MAIN();
