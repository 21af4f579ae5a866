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

#include <gtest/gtest.h>

#include "qdt/rabi.hpp"

namespace qdt {
namespace {

using std::numbers::pi;

// Binomial coefficient by lgamma, independent of the library recurrence.
double binom_lgamma(std::size_t n, std::size_t m, double p) {
  if (p == 0.0) return m == 0 ? 1.0 : 0.0;
  if (p == 1.0) return m == n ? 1.0 : 0.0;
  const double lc = std::lgamma(n + 1.0) - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0);
  return std::exp(lc + m * std::log(p) + (n - m) * std::log1p(-p));
}

TEST(Rabi, FrequencyConversionRoundTrip) {
  EXPECT_NEAR(omega_from_cyclic_khz(1.0), 2.0 * pi * 1e3, 1e-9);
  EXPECT_NEAR(cyclic_khz_from_omega(omega_from_cyclic_khz(8.2)), 8.2, 1e-12);
  const RabiParams r(omega_from_cyclic_khz(8.2));
  EXPECT_NEAR(r.theta(10.0), 2.0 * pi * 8.2e3 * 10e-6, 1e-12);
}

TEST(Rabi, TransferProbability) {
  EXPECT_NEAR(transfer_prob_theta(0.0), 0.0, 1e-15);
  EXPECT_NEAR(transfer_prob_theta(pi / 2.0), 0.5, 1e-15);
  EXPECT_NEAR(transfer_prob_theta(pi), 1.0, 1e-15);
}

TEST(Rabi, BinomialMatchesLgammaForm) {
  for (std::size_t n : {0u, 1u, 7u, 40u, 120u}) {
    for (double p : {0.0, 0.13, 0.5, 0.91, 1.0}) {
      const std::vector<double> b = binomial_pmf(n, p);
      ASSERT_EQ(b.size(), n + 1);
      for (std::size_t m = 0; m <= n; ++m) EXPECT_NEAR(b[m], binom_lgamma(n, m, p), 1e-12);
    }
  }
}

TEST(Rabi, BinomialDerivativeMatchesFiniteDifference) {
  const double h = 1e-6;
  for (std::size_t n : {1u, 5u, 30u}) {
    for (double p : {0.1, 0.4, 0.77}) {
      const auto d = binomial_pmf_dp(n, p);
      const auto plus = binomial_pmf(n, p + h), minus = binomial_pmf(n, p - h);
      for (std::size_t m = 0; m <= n; ++m) {
        EXPECT_NEAR(d[m], (plus[m] - minus[m]) / (2 * h), 1e-6);
      }
    }
  }
}

TEST(Rabi, PoissonAndConvolution) {
  const auto p = poisson_pmf(0.27, 40);
  EXPECT_NEAR(p[0], std::exp(-0.27), 1e-15);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-14);
  const auto c = convolve({0.5, 0.5}, {0.25, 0.75});
  ASSERT_EQ(c.size(), 3u);
  EXPECT_NEAR(c[0], 0.125, 1e-15);
  EXPECT_NEAR(c[1], 0.5, 1e-15);
  EXPECT_NEAR(c[2], 0.375, 1e-15);
}

// The binomial closed form must agree with exact unitary evolution of the
// fixed-N two-mode coupling.
TEST(Rabi, ClosedFormMatchesExactUnitary) {
  for (std::size_t n = 0; n <= 12; ++n) {
    for (double theta : {0.0, pi / 7.0, pi / 3.0, pi / 2.0, pi}) {
      const ProbVector closed = ideal_distribution_theta(DiagonalState::fock(n), theta);
      const ProbVector exact = exact_unitary_oracle(n, theta);
      for (std::size_t m = 0; m <= n; ++m) {
        EXPECT_NEAR(closed[m], exact[m], 1e-10) << "N=" << n << " theta=" << theta << " m=" << m;
      }
    }
  }
}

TEST(Rabi, MixtureIsLinearInRho) {
  const DiagonalState a = DiagonalState::fock(5), b = DiagonalState::fock(9);
  std::vector<double> w(10, 0.0);
  w[5] = 0.3;
  w[9] = 0.7;
  const ProbVector mix = ideal_distribution_theta(DiagonalState(w), 1.1);
  const ProbVector pa = ideal_distribution_theta(a, 1.1), pb = ideal_distribution_theta(b, 1.1);
  for (std::size_t m = 0; m < 10; ++m) EXPECT_NEAR(mix[m], 0.3 * pa[m] + 0.7 * pb[m], 1e-14);
}

TEST(Rabi, IdealMeanIsNTimesTransfer) {
  const DiagonalState s = DiagonalState::gaussian(35.4, 6.4);
  const RabiParams r(omega_from_cyclic_khz(8.2));
  for (double t : {0.0, 4.0, 12.0, 28.0}) {
    EXPECT_NEAR(ideal_distribution(s, r, t).mean(), s.mean() * transfer_prob(r, t), 1e-9);
  }
}

TEST(Rabi, ReferenceModelAddsDarkCounts) {
  const RabiParams r(omega_from_cyclic_khz(8.2));
  const ProbVector ref = reference_binomial_model(20.0, 3.0, r, 16.0, DarkCountModel(0.27));
  const ProbVector clean = reference_binomial_model(20.0, 3.0, r, 16.0, DarkCountModel(0.0));
  EXPECT_NEAR(ref.mean() - clean.mean(), 0.27, 1e-6);
  EXPECT_NEAR(ref.variance() - clean.variance(), 0.27, 1e-5);
}

}  // namespace
}  // namespace qdt
