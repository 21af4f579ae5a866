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

#include "qdt/rabi.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace qdt {

RabiParams::RabiParams(double omega) : omega_rad_per_s(omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw std::invalid_argument("RabiParams: omega_r must be positive and finite");
  }
}

double omega_from_cyclic_khz(double f_khz) { return 2.0 * std::numbers::pi * f_khz * 1e3; }

double cyclic_khz_from_omega(double omega) { return omega / (2.0 * std::numbers::pi * 1e3); }

DarkCountModel::DarkCountModel(double mean) : mean_dark(mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("DarkCountModel: mean_dark must be >= 0");
  }
}

double transfer_prob_theta(double theta) {
  const double s = std::sin(0.5 * theta);
  return s * s;
}

double transfer_prob(const RabiParams& params, double t_us) {
  if (t_us < 0.0) throw std::invalid_argument("transfer_prob: negative duration");
  return transfer_prob_theta(params.theta(t_us));
}

std::vector<double> binomial_pmf(std::size_t n, double p) {
  std::vector<double> out(n + 1, 0.0);
  if (p <= 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (p >= 1.0) {
    out[n] = 1.0;
    return out;
  }
  const double nn = static_cast<double>(n);
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lgn = std::lgamma(nn + 1.0);
  for (std::size_t m = 0; m <= n; ++m) {
    const double k = static_cast<double>(m);
    out[m] = std::exp(lgn - std::lgamma(k + 1.0) - std::lgamma(nn - k + 1.0) + k * lp +
                      (nn - k) * lq);
  }
  return out;
}

std::vector<double> binomial_pmf_dp(std::size_t n, double p) {
  std::vector<double> out(n + 1, 0.0);
  if (n == 0) return out;
  const std::vector<double> lower = binomial_pmf(n - 1, p);
  const double nn = static_cast<double>(n);
  for (std::size_t m = 0; m <= n; ++m) {
    const double up = m >= 1 ? lower[m - 1] : 0.0;
    const double same = m <= n - 1 ? lower[m] : 0.0;
    out[m] = nn * (up - same);
  }
  return out;
}

std::vector<double> poisson_pmf(double lambda, std::size_t k_max) {
  std::vector<double> out(k_max + 1, 0.0);
  if (lambda <= 0.0) {
    out[0] = 1.0;
    return out;
  }
  out[0] = std::exp(-lambda);
  for (std::size_t k = 1; k <= k_max; ++k) out[k] = out[k - 1] * lambda / static_cast<double>(k);
  return out;
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

ProbVector ideal_distribution_theta(const DiagonalState& state, double theta) {
  const double p = transfer_prob_theta(theta);
  std::vector<double> out(state.size(), 0.0);
  for (std::size_t n = 0; n < state.size(); ++n) {
    const double w = state[n];
    if (w == 0.0) continue;
    const std::vector<double> b = binomial_pmf(n, p);
    for (std::size_t m = 0; m <= n; ++m) out[m] += w * b[m];
  }
  return ProbVector(std::move(out));
}

ProbVector ideal_distribution(const DiagonalState& state, const RabiParams& params, double t_us) {
  if (t_us < 0.0) throw std::invalid_argument("ideal_distribution: negative duration");
  return ideal_distribution_theta(state, params.theta(t_us));
}

ProbVector exact_unitary_oracle(std::size_t n_total, double theta) {
  if (n_total > 20) throw std::invalid_argument("exact_unitary_oracle: n_total must be <= 20");
  const auto dim = static_cast<Eigen::Index>(n_total + 1);
  // Basis |m>_a |N - m>_b. H = (a^dag b + a b^dag) / 2, and U = exp(-i theta H).
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index m = 0; m + 1 < dim; ++m) {
    const double amp =
        0.5 * std::sqrt(static_cast<double>(m + 1) * static_cast<double>(dim - 1 - m));
    h(m + 1, m) = amp;
    h(m, m + 1) = amp;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Eigen::MatrixXd& u = es.eigenvectors();
  const Eigen::VectorXd& lambda = es.eigenvalues();
  // psi = U diag(exp(-i theta lambda)) U^T e_0
  Eigen::VectorXcd coeff(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    coeff(k) = std::polar(1.0, -theta * lambda(k)) * u(0, k);
  }
  const Eigen::VectorXcd psi = u.cast<std::complex<double>>() * coeff;
  std::vector<double> out(n_total + 1);
  for (Eigen::Index m = 0; m < dim; ++m) out[static_cast<std::size_t>(m)] = std::norm(psi(m));
  return ProbVector::from_weights(std::move(out));
}

ProbVector reference_binomial_model(double mean_n, double std_n, const RabiParams& params,
                                    double t_us, const DarkCountModel& dark) {
  if (!(mean_n > 0.0) || !(std_n >= 0.0)) {
    throw std::invalid_argument("reference_binomial_model: need mean_n > 0 and std_n >= 0");
  }
  const DiagonalState state = DiagonalState::gaussian(mean_n, std_n);
  const ProbVector ideal = ideal_distribution(state, params, t_us);
  if (dark.mean_dark == 0.0) return ideal;
  const auto k_max =
      static_cast<std::size_t>(std::ceil(dark.mean_dark + 12.0 * std::sqrt(dark.mean_dark) + 12.0));
  return ProbVector::from_weights(convolve(ideal.vec(), poisson_pmf(dark.mean_dark, k_max)));
}

}  // namespace qdt
