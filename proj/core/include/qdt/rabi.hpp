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

// Forward model for resonant two-mode Rabi coupling of a Fock-diagonal state.
//
// Angle convention: theta = omega_r * t, and a single atom is transferred from
// level b to level a with probability sin^2(theta / 2). Cyclic frequencies
// (kHz, as quoted for sinusoidal fits) are converted at the boundary with
// omega_from_cyclic_khz().

#ifndef QDT_RABI_HPP_
#define QDT_RABI_HPP_

#include <cstddef>
#include <vector>

#include "qdt/prob.hpp"

namespace qdt {

struct RabiParams {
  double omega_rad_per_s = 0.0;

  explicit RabiParams(double omega_rad_per_s);

  /// Rotation angle accumulated after a pulse of t_us microseconds.
  double theta(double t_us) const { return omega_rad_per_s * t_us * 1e-6; }
};

double omega_from_cyclic_khz(double f_khz);
double cyclic_khz_from_omega(double omega_rad_per_s);

struct DarkCountModel {
  double mean_dark = 0.0;

  explicit DarkCountModel(double mean_dark = 0.0);
};

/// sin^2(theta / 2).
double transfer_prob(const RabiParams& params, double t_us);
double transfer_prob_theta(double theta);

/// Binomial(m; n, p) for m = 0..n.
std::vector<double> binomial_pmf(std::size_t n, double p);

/// Derivative of binomial_pmf with respect to p:
/// n [B(m-1; n-1, p) - B(m; n-1, p)].
std::vector<double> binomial_pmf_dp(std::size_t n, double p);

/// Poisson(k; lambda) for k = 0..k_max; tail mass beyond k_max is dropped.
std::vector<double> poisson_pmf(double lambda, std::size_t k_max);

/// Full linear convolution of two distributions.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b);

/// P_id(m | t) = sum_N rho_N Binomial(m; N, p(t)), for m = 0..size(rho)-1.
ProbVector ideal_distribution(const DiagonalState& state, const RabiParams& params, double t_us);
ProbVector ideal_distribution_theta(const DiagonalState& state, double theta);

/// Number distribution in level a obtained by exponentiating the
/// fixed-N two-mode coupling exactly (dense diagonalization) and evolving
/// |0>_a |N>_b. Independent of the binomial closed form. n_total <= 20.
ProbVector exact_unitary_oracle(std::size_t n_total, double theta);

/// Gaussian-weighted total number (mean_n, std_n; 6 sigma cut at N >= 0),
/// binomial transfer, then Poisson dark-count convolution.
ProbVector reference_binomial_model(double mean_n, double std_n, const RabiParams& params,
                                    double t_us, const DarkCountModel& dark);

}  // namespace qdt

#endif  // QDT_RABI_HPP_
