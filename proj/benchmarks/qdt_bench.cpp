// Copyright 2026 The QDT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "qdt/analysis.hpp"
#include "qdt/metrology.hpp"
#include "qdt/simulator.hpp"
#include "qdt/tomography.hpp"

namespace {

qdt::HistogramDataset reference_dataset() {
  qdt::ExperimentPlan plan;
  plan.times_us = {0, 4, 8, 12, 16, 20, 24, 28};
  plan.shots_per_time = 1100;
  plan.rabi = qdt::RabiParams(qdt::omega_from_cyclic_khz(8.2));
  plan.state = qdt::DiagonalState::gaussian(35.4, 6.4);
  plan.rng_seed = 1;
  return qdt::sample_dataset(plan, qdt::build_detector(qdt::SyntheticDetectorSpec{
                                       0.4, qdt::DarkCountModel(0.27), 0.0, 59, qdt::BlurKernel::kPointSampled}));
}

void BM_IdealDistribution(benchmark::State& state) {
  const qdt::DiagonalState rho = qdt::DiagonalState::gaussian(static_cast<double>(state.range(0)), 6.4);
  for (auto _ : state) benchmark::DoNotOptimize(qdt::ideal_distribution_theta(rho, 1.1));
}
BENCHMARK(BM_IdealDistribution)->Arg(35)->Arg(150);

void BM_CostGradient(benchmark::State& state) {
  const qdt::HistogramDataset data = reference_dataset();
  const std::size_t dim = data.max_observed() + 1;
  const qdt::CostModel model(data, dim, dim);
  const auto k = model.kernels(qdt::omega_from_cyclic_khz(8.2));
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(dim, dim, 1.0 / dim);
  Eigen::VectorXd rho = Eigen::VectorXd::Constant(dim, 1.0 / dim);
  for (auto _ : state) benchmark::DoNotOptimize(model.gradient(v, rho, k));
}
BENCHMARK(BM_CostGradient);

void BM_Kernels(benchmark::State& state) {
  const qdt::HistogramDataset data = reference_dataset();
  const std::size_t dim = data.max_observed() + 1;
  const qdt::CostModel model(data, dim, dim);
  for (auto _ : state) benchmark::DoNotOptimize(model.kernels(qdt::omega_from_cyclic_khz(8.2)));
}
BENCHMARK(BM_Kernels);

void BM_OuterIterations(benchmark::State& state) {
  const qdt::HistogramDataset data = reference_dataset();
  qdt::TomographyConfig c;
  c.max_outer_iters = 10;
  c.cost_cutoff = 1e-9;
  for (auto _ : state) benchmark::DoNotOptimize(qdt::reconstruct(data, c));
}
BENCHMARK(BM_OuterIterations)->Unit(benchmark::kMillisecond);

void BM_WignerGrid(benchmark::State& state) {
  const qdt::PovmSet povm(qdt::build_detector(
      qdt::SyntheticDetectorSpec{0.4, qdt::DarkCountModel(0.27), 0.0, 59, qdt::BlurKernel::kPointSampled}));
  const auto axis = qdt::default_wigner_axis();
  for (auto _ : state) benchmark::DoNotOptimize(qdt::wigner(povm, 10, axis, axis));
}
BENCHMARK(BM_WignerGrid)->Unit(benchmark::kMillisecond);

void BM_FisherInformation(benchmark::State& state) {
  const qdt::DiagonalState rho = qdt::DiagonalState::gaussian(35.4, 6.4);
  const qdt::DetectorMatrix v = qdt::DetectorMatrix::identity(rho.size());
  for (auto _ : state) benchmark::DoNotOptimize(qdt::fisher_information(v, rho, 1.2));
}
BENCHMARK(BM_FisherInformation);

void BM_SpinSector(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(qdt::SpinSector(static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_SpinSector)->Arg(36)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_OptimizeTheta(benchmark::State& state) {
  const qdt::DetectorMatrix v = qdt::build_detector(
      qdt::SyntheticDetectorSpec{0.4, qdt::DarkCountModel(0.27), 0.0, 59, qdt::BlurKernel::kPointSampled});
  const auto e = qdt::SqueezedEnsemble::gaussian(0.1, 36.0, 6.0);
  for (auto _ : state) benchmark::DoNotOptimize(qdt::optimize_theta(e, &v));
}
BENCHMARK(BM_OptimizeTheta)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
