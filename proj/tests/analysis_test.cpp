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
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "qdt/analysis.hpp"
#include "qdt/simulator.hpp"

namespace qdt {
namespace {

using std::numbers::pi;

DetectorMatrix synthetic(double sigma, double dark, BlurKernel k = BlurKernel::kPointSampled,
                         std::size_t n_max = 59) {
  return build_detector(SyntheticDetectorSpec{sigma, DarkCountModel(dark), 0.0, n_max, k});
}

Eigen::VectorXd fock_weights(std::size_t n, std::size_t dim) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  w(static_cast<Eigen::Index>(n)) = 1.0;
  return w;
}

TEST(Povm, ElementsSumToIdentity) {
  const PovmSet povm(synthetic(0.4, 0.27));
  const Eigen::VectorXd c = povm.completeness();
  for (Eigen::Index m = 0; m < c.size(); ++m) EXPECT_NEAR(c(m), 1.0, 1e-12);
  EXPECT_EQ(povm.size(), 60u);
  EXPECT_GE(povm.element(5).minCoeff(), 0.0);
}

TEST(Laguerre, LowOrdersMatchClosedForms) {
  for (double z : {0.0, 0.3, 2.0, 7.5}) {
    const auto l = laguerre_all(3, z);
    EXPECT_NEAR(l[0], 1.0, 1e-15);
    EXPECT_NEAR(l[1], 1.0 - z, 1e-14);
    EXPECT_NEAR(l[2], (z * z - 4 * z + 2) / 2.0, 1e-13);
    EXPECT_NEAR(l[3], (-z * z * z + 9 * z * z - 18 * z + 6) / 6.0, 1e-12);
  }
}

TEST(Wigner, FockStatesAtOrigin) {
  for (std::size_t n = 0; n < 8; ++n) {
    const double sign = n % 2 == 0 ? 1.0 : -1.0;
    EXPECT_NEAR(wigner_diagonal(fock_weights(n, 10), 0.0, 0.0), sign / pi, 1e-14);
  }
}

TEST(Wigner, FirstFockStateProfile) {
  for (double r : {0.0, 0.5, 1.0, 2.0}) {
    const double expect = (2 * r * r - 1) * std::exp(-r * r) / pi;
    EXPECT_NEAR(wigner_diagonal(fock_weights(1, 4), r, 0.0), expect, 1e-14);
  }
}

TEST(Wigner, RadiallySymmetric) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd w(12);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = u(rng);
  for (double phi : {0.3, 1.1, 2.5}) {
    const double r = 1.7;
    EXPECT_NEAR(wigner_diagonal(w, r * std::cos(phi), r * std::sin(phi)), wigner_diagonal(w, r, 0.0),
                1e-13);
  }
}

TEST(Wigner, LinearInWeights) {
  const Eigen::VectorXd a = fock_weights(2, 6), b = fock_weights(5, 6);
  for (double x : {0.0, 0.4, 1.3}) {
    EXPECT_NEAR(wigner_diagonal(0.25 * a + 0.75 * b, x, 0.2),
                0.25 * wigner_diagonal(a, x, 0.2) + 0.75 * wigner_diagonal(b, x, 0.2), 1e-14);
  }
}

// A thermal mixture has a positive Gaussian W: the Fock-state negativities
// cancel.
TEST(Wigner, ThermalMixtureIsGaussian) {
  const double q = 0.5;
  Eigen::VectorXd w(90);
  for (Eigen::Index m = 0; m < w.size(); ++m) w(m) = (1 - q) * std::pow(q, static_cast<double>(m));
  for (double r : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    const double expect = (1 - q) / (pi * (1 + q)) * std::exp(-r * r * (1 - q) / (1 + q));
    EXPECT_NEAR(wigner_diagonal(w, r, 0.0), expect, 1e-12);
  }
}

TEST(Wigner, BoundedForNormalizedStates) {
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> e(1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd w(15);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = e(rng);
    w /= w.sum();
    for (double x : {0.0, 0.7, 1.9}) EXPECT_LE(std::abs(wigner_diagonal(w, x, 0.1)), 1.0 / pi + 1e-12);
  }
}

TEST(Wigner, IdealDetectorElementsMatchFockStates) {
  const PovmSet povm(DetectorMatrix::identity(12));
  const WignerGrid g = wigner(povm, 0, default_wigner_axis(), default_wigner_axis());
  EXPECT_EQ(g.values.rows(), 241);
  EXPECT_GE(wigner_negativity(g), -1e-12);
  const WignerGrid g1 = wigner(povm, 1, {0.0}, {0.0});
  EXPECT_NEAR(wigner_negativity(g1), -1.0 / pi, 1e-14);
  EXPECT_THROW(wigner(povm, 12, {0.0}, {0.0}), std::out_of_range);
}

TEST(Resolution, IdealDetectorHasUnitDiagonalMass) {
  const DiagonalState rho = DiagonalState::gaussian(35.4, 6.4);
  const RabiParams r(omega_from_cyclic_khz(8.2));
  const std::vector<double> times{0, 4, 8, 12, 16, 20, 24, 28};
  const ProbVector arr = arrival_distribution(60, rho, r, times);
  EXPECT_NEAR(std::accumulate(arr.vec().begin(), arr.vec().end(), 0.0), 1.0, 1e-12);
  const ResolutionStats s = resolution_stats(DetectorMatrix::identity(60), rho, r, times);
  EXPECT_NEAR(s.diagonal_mass, 1.0, 1e-12);
  EXPECT_NEAR(s.at(0), 1.0, 1e-12);
  EXPECT_EQ(s.at(-5), 0.0);
  EXPECT_EQ(s.sigma, 0.0);
}

TEST(Resolution, RecoversSyntheticBlurWidth) {
  const DetectorMatrix v = synthetic(0.4, 0.0);
  // Arrivals away from the m = 0 boundary.
  std::vector<double> p(60, 0.0);
  for (std::size_t m = 10; m < 40; ++m) p[m] = 1.0 / 30.0;
  const ResolutionStats s = resolution_stats(v, ProbVector(p));
  EXPECT_NEAR(s.sigma, 0.4, 1e-3);
  EXPECT_NEAR(s.diagonal_mass, 1.0 / (1.0 + 2 * std::exp(-1 / 0.32) + 2 * std::exp(-4 / 0.32)), 1e-6);
}

TEST(AssignmentFidelity, NarrowBinIntegratedBlur) {
  const DetectorMatrix v = synthetic(0.2, 0.0, BlurKernel::kBinIntegrated);
  const double expect = std::erf(0.5 / (0.2 * std::sqrt(2.0)));
  for (std::size_t m : {1u, 5u, 10u, 15u}) {
    EXPECT_NEAR(assignment_fidelity(v, m), expect, 1e-9);
    EXPECT_NEAR(assignment_fidelity(v, m), 0.99, 0.005);
  }
}

TEST(AssignmentFidelity, DarkCountsScaleByPoissonZero) {
  const DetectorMatrix clean = synthetic(0.2, 0.0, BlurKernel::kBinIntegrated);
  const DetectorMatrix dark = synthetic(0.2, 0.27, BlurKernel::kBinIntegrated);
  for (std::size_t m : {5u, 10u, 15u}) {
    EXPECT_NEAR(assignment_fidelity(dark, m) / assignment_fidelity(clean, m), std::exp(-0.27), 2e-3);
  }
}

TEST(Fisher, AnalyticDerivativeMatchesFiniteDifference) {
  const DetectorMatrix v = synthetic(0.4, 0.27, BlurKernel::kPointSampled, 40);
  const DiagonalState rho = DiagonalState::gaussian(20.0, 3.0);
  const double h = 1e-6;
  for (double theta : {0.3, 1.2, 2.6}) {
    const DetectedDistribution d = detected_distribution(v, rho, theta);
    const DetectedDistribution dp = detected_distribution(v, rho, theta + h);
    const DetectedDistribution dm = detected_distribution(v, rho, theta - h);
    EXPECT_NEAR(d.p.sum(), 1.0, 1e-12);
    for (Eigen::Index n = 0; n < d.p.size(); ++n) {
      EXPECT_NEAR(d.dp_dtheta(n), (dp.p(n) - dm.p(n)) / (2 * h), 1e-7);
    }
  }
}

// For a Fock state the binomial count distribution carries F = N at every
// angle.
TEST(Fisher, FockStateIdealCounting) {
  for (std::size_t n : {1u, 10u, 36u}) {
    for (double theta : {0.2, 1.0, 2.0, 3.0}) {
      EXPECT_NEAR(fisher_information(DetectorMatrix::identity(n + 1), DiagonalState::fock(n), theta),
                  static_cast<double>(n), 1e-6 * n);
    }
  }
}

TEST(Fisher, PoissonStateIdealCounting) {
  const DiagonalState rho = DiagonalState::poisson(35.4, 12.0);
  const DetectorMatrix v = DetectorMatrix::identity(rho.size());
  for (double theta : {0.3, 1.0, 1.6, 2.4}) {
    const double c = std::cos(theta / 2);
    EXPECT_NEAR(fisher_information(v, rho, theta) / 35.4, c * c, 1e-6);
  }
}

// Post-processing by a stochastic matrix cannot add information.
TEST(Fisher, NoisyDetectorNeverExceedsIdeal) {
  const DiagonalState rho = DiagonalState::gaussian(20.0, 3.0);
  const DetectorMatrix ideal = DetectorMatrix::identity(50);
  const DetectorMatrix noisy = synthetic(0.6, 0.27, BlurKernel::kPointSampled, 49);
  for (double theta = 0.1; theta < pi; theta += 0.25) {
    EXPECT_LE(fisher_information(noisy, rho, theta), fisher_information(ideal, rho, theta) + 1e-9);
  }
}

}  // namespace
}  // namespace qdt
