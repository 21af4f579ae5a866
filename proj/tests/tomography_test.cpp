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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "qdt/simulator.hpp"
#include "qdt/tomography.hpp"

namespace qdt {
namespace {

std::vector<double> times_to(double t_max, double step) {
  std::vector<double> t;
  for (double x = 0.0; x <= t_max + 1e-9; x += step) t.push_back(x);
  return t;
}

// Small problem: ~8 atoms, short outcome range, fast to reconstruct.
HistogramDataset small_dataset(std::uint64_t seed, std::uint64_t shots = 4000) {
  ExperimentPlan plan;
  plan.times_us = times_to(56.0, 4.0);
  plan.shots_per_time = shots;
  plan.rabi = RabiParams(omega_from_cyclic_khz(8.2));
  plan.state = DiagonalState::gaussian(8.0, 1.5);
  plan.rng_seed = seed;
  SyntheticDetectorSpec spec{0.4, DarkCountModel(0.1), 0.0, 16, BlurKernel::kPointSampled};
  return sample_dataset(plan, build_detector(spec));
}

TomographyConfig fast_config() {
  TomographyConfig c;
  c.max_outer_iters = 200;
  return c;
}

TEST(Config, ValidateRejectsBadValues) {
  TomographyConfig c;
  EXPECT_NO_THROW(c.validate());
  c.cost_cutoff = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TomographyConfig{};
  c.inner_iters_v = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TomographyConfig{};
  c.step_rho = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(cost_kind_from_string("euclid"), std::invalid_argument);
  EXPECT_EQ(cost_kind_from_string("kl"), CostKind::kKullbackLeibler);
}

// On noiseless data from an ideal counter the moment fits recover the
// generating parameters.
TEST(InitFits, RecoverGeneratingParameters) {
  const DiagonalState rho = DiagonalState::gaussian(20.0, 3.0);
  const HistogramDataset d = exact_dataset(times_to(56.0, 4.0), RabiParams(omega_from_cyclic_khz(8.2)),
                                           rho, DetectorMatrix::identity(40));
  const InitialGuess g = init_from_fits(d, 1);
  EXPECT_NEAR(g.fits.frequency_khz, 8.2, 1e-4);
  EXPECT_NEAR(g.fits.mean_n, rho.mean(), 1e-3);
  EXPECT_NEAR(g.fits.offset, 0.0, 1e-3);
  EXPECT_NEAR(g.fits.delta_n, std::sqrt(rho.variance()), 1e-2);
  EXPECT_FALSE(g.fits.delta_n_fallback);
  EXPECT_NEAR(g.rabi.omega_rad_per_s, omega_from_cyclic_khz(8.2), 1.0);
}

TEST(InitFits, SeedChangesOnlyTheRandomDetector) {
  const HistogramDataset d = small_dataset(1);
  const InitialGuess a = init_from_fits(d, 1), b = init_from_fits(d, 2);
  EXPECT_EQ(a.fits.frequency_khz, b.fits.frequency_khz);
  EXPECT_EQ(a.fits.mean_n, b.fits.mean_n);
  EXPECT_EQ(a.rho, b.rho);
  EXPECT_GT((a.v.matrix() - b.v.matrix()).cwiseAbs().maxCoeff(), 1e-3);
  for (Eigen::Index c = 0; c < a.v.matrix().cols(); ++c) {
    EXPECT_NEAR(a.v.matrix().col(c).sum(), 1.0, 1e-12);
  }
}

TEST(InitFits, RejectsTooFewTimes) {
  const HistogramDataset d = HistogramDataset::from_counts({0.0, 4.0}, {{5, 5}, {2, 8}});
  EXPECT_THROW(init_from_fits(d, 1), std::invalid_argument);
}

class GradientTest : public ::testing::TestWithParam<CostKind> {};

// Analytic gradients against central differences on an interior point.
TEST_P(GradientTest, MatchesFiniteDifferences) {
  const HistogramDataset d = small_dataset(4, 500);
  const std::size_t dim = d.max_observed() + 1, rho_dim = dim;
  const CostModel model(d, dim, rho_dim, GetParam());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Eigen::MatrixXd v(dim, dim);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
  v = v.array().rowwise() / v.colwise().sum().array();
  Eigen::VectorXd rho(rho_dim);
  for (Eigen::Index i = 0; i < rho.size(); ++i) rho(i) = u(rng);
  rho /= rho.sum();
  const double omega = omega_from_cyclic_khz(8.0);

  const auto k = model.kernels(omega);
  const CostModel::Gradient g = model.gradient(v, rho, k);
  EXPECT_NEAR(g.value, model.value(v, rho, k), 1e-12);

  auto rel_check = [](double analytic, double numeric) {
    EXPECT_NEAR(analytic, numeric, 1e-5 * std::max(1.0, std::abs(numeric)));
  };
  const double h = 1e-6;
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index r = static_cast<Eigen::Index>(rng() % dim);
    const Eigen::Index c = static_cast<Eigen::Index>(rng() % dim);
    Eigen::MatrixXd vp = v, vm = v;
    vp(r, c) += h;
    vm(r, c) -= h;
    rel_check(g.d_v(r, c), (model.value(vp, rho, k) - model.value(vm, rho, k)) / (2 * h));
  }
  for (Eigen::Index n = 0; n < rho.size(); n += 3) {
    Eigen::VectorXd rp = rho, rm = rho;
    rp(n) += h;
    rm(n) -= h;
    rel_check(g.d_rho(n), (model.value(v, rp, k) - model.value(v, rm, k)) / (2 * h));
  }
  const double ho = omega * 1e-7;
  const double fd = (model.value(v, rho, model.kernels(omega + ho)) -
                     model.value(v, rho, model.kernels(omega - ho))) / (2 * ho);
  EXPECT_NEAR(g.d_omega, fd, 1e-5 * std::max(std::abs(fd), 1e-8));
}

INSTANTIATE_TEST_SUITE_P(Costs, GradientTest,
                         ::testing::Values(CostKind::kHellinger, CostKind::kKullbackLeibler));

TEST(Reconstruct, EveryAcceptedStepStaysFeasible) {
  const HistogramDataset d = small_dataset(5);
  std::size_t steps = 0;
  bool ok = true;
  double last = std::numeric_limits<double>::infinity();
  bool monotone = true;
  const auto observer = [&](Block, const Eigen::MatrixXd& v, const Eigen::VectorXd& rho, double omega,
                            double c) {
    ++steps;
    ok = ok && v.minCoeff() >= 0.0 && rho.minCoeff() >= 0.0 && omega > 0.0;
    ok = ok && (v.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9;
    ok = ok && std::abs(rho.sum() - 1.0) < 1e-9;
    monotone = monotone && c <= last + 1e-12;
    last = c;
  };
  const TomographyResult r = reconstruct(d, fast_config(), observer);
  EXPECT_GT(steps, 0u);
  EXPECT_TRUE(ok);
  EXPECT_TRUE(monotone);
  for (std::size_t i = 1; i < r.cost_trace.size(); ++i) {
    EXPECT_LE(r.cost_trace[i], r.cost_trace[i - 1] + 1e-12);
  }
  EXPECT_LE(r.final_cost, r.initial_cost);
}

TEST(Reconstruct, SameSeedSameResult) {
  const HistogramDataset d = small_dataset(6);
  const TomographyResult a = reconstruct(d, fast_config());
  const TomographyResult b = reconstruct(d, fast_config());
  EXPECT_EQ(a.v.matrix(), b.v.matrix());
  EXPECT_EQ(a.omega_rad_per_s, b.omega_rad_per_s);
  EXPECT_EQ(a.cost_trace, b.cost_trace);
  TomographyConfig other = fast_config();
  other.rng_seed = 2;
  const TomographyResult c = reconstruct(d, other);
  EXPECT_GT((a.v.matrix() - c.v.matrix()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(a.fits.frequency_khz, c.fits.frequency_khz);
}

// Noiseless data: the fitted model must reproduce every histogram.
TEST(Reconstruct, NoiselessRoundTripReproducesData) {
  SyntheticDetectorSpec spec{0.4, DarkCountModel(0.1), 0.0, 14, BlurKernel::kPointSampled};
  const RabiParams rabi(omega_from_cyclic_khz(8.2));
  const HistogramDataset d = exact_dataset(times_to(56.0, 4.0), rabi, DiagonalState::gaussian(6.0, 1.2),
                                           build_detector(spec));
  TomographyConfig c;
  c.cost_cutoff = 1e-3;
  c.max_outer_iters = 300;
  const TomographyResult r = reconstruct(d, c);
  for (std::size_t j = 0; j < d.size(); ++j) {
    const ProbVector p = predict(r.v, r.rho, r.omega_rad_per_s, d.times_us()[j]);
    EXPECT_GE(fidelity(p, d.histograms()[j]), 0.99) << "t = " << d.times_us()[j];
  }
}

TEST(Reconstruct, IdentityDetectorComesBackDiagonalDominant) {
  const HistogramDataset d = exact_dataset(times_to(56.0, 4.0), RabiParams(omega_from_cyclic_khz(8.2)),
                                           DiagonalState::fock(10), DetectorMatrix::identity(11));
  const TomographyResult r = reconstruct(d, TomographyConfig{});
  EXPECT_TRUE(r.converged);
  for (std::size_t m = 0; m <= 10; ++m) {
    for (std::size_t n = 0; n <= 10; ++n) {
      if (n != m) {
        EXPECT_GT(r.v(m, m), r.v(n, m)) << "column " << m;
      }
    }
  }
}

TEST(Reconstruct, ConvergedCostDoesNotDependOnInitialDetector) {
  const HistogramDataset d = small_dataset(12);
  TomographyConfig a, b;
  a.max_outer_iters = b.max_outer_iters = 1500;
  b.rng_seed = 2;
  const TomographyResult ra = reconstruct(d, a), rb = reconstruct(d, b);
  EXPECT_TRUE(ra.converged);
  EXPECT_TRUE(rb.converged);
  EXPECT_NEAR(ra.final_cost, rb.final_cost, 0.1 * ra.final_cost);
}

// Overlapping histograms over n <= 20: sampled data reaches the cutoff.
TEST(Reconstruct, SampledRoundTripReachesCutoff) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    TomographyConfig c;
    c.max_outer_iters = 1500;
    c.rng_seed = seed;
    const TomographyResult r = reconstruct(small_dataset(20 + seed), c);
    EXPECT_TRUE(r.converged) << "seed " << seed << " stopped at " << r.final_cost;
  }
}

TEST(Reconstruct, NonConvergenceIsReportedNotThrown) {
  const HistogramDataset d = small_dataset(7, 200);
  TomographyConfig c;
  c.cost_cutoff = 1e-9;
  c.max_outer_iters = 3;
  const TomographyResult r = reconstruct(d, c);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.cost_trace.size(), 3u);
}

TEST(Reconstruct, CostMatchesFreeFunction) {
  const HistogramDataset d = small_dataset(8);
  const TomographyResult r = reconstruct(d, fast_config());
  EXPECT_NEAR(cost(r.v, r.rho, r.omega_rad_per_s, d), r.final_cost, 1e-9);
}

TEST(Bootstrap, ReplicasAreIndependentlySeeded) {
  const HistogramDataset d = small_dataset(9);
  TomographyConfig c = fast_config();
  c.bootstrap_replicas = 3;
  const TomographyResult r = reconstruct(d, c);
  const BootstrapEnsemble e = bootstrap(r, d, c);
  ASSERT_EQ(e.replicas.size(), 3u);
  EXPECT_GT(e.omega.std, 0.0);
  EXPECT_NE(resample_dataset(r, d, 1).counts(), resample_dataset(r, d, 2).counts());
  EXPECT_EQ(resample_dataset(r, d, 1).counts(), resample_dataset(r, d, 1).counts());
  EXPECT_EQ(e.v_mean.rows(), static_cast<Eigen::Index>(r.v.dim()));
}

TEST(LearningTest, HeldOutTimeIsPredicted) {
  const HistogramDataset d = small_dataset(10);
  const LearningTestResult t = learning_test(d, 3, fast_config());
  EXPECT_EQ(t.held_out, 3u);
  EXPECT_EQ(t.trained.cost_trace.empty(), false);
  EXPECT_GT(t.fidelity, 0.98);
  EXPECT_NEAR(t.fidelity, fidelity(t.predicted, d.histograms()[3]), 1e-12);
}

TEST(Summarize, MeanAndSampleStd) {
  const SummaryStat s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.std, std::sqrt(5.0 / 3.0), 1e-14);
}

}  // namespace
}  // namespace qdt
