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

#include "qdt/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

namespace qdt {
namespace {

constexpr double kFisherFloor = 1e-12;
constexpr std::array<int, 4> kSigmaFitOffsets{0, -1, -2, -3};

// Sum of squared residuals of the fixed-center Gaussian with the amplitude
// eliminated in closed form.
double sigma_fit_residual(const std::array<double, 4>& y, double sigma) {
  std::array<double, 4> g{};
  double gy = 0.0, gg = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double k = kSigmaFitOffsets[i];
    g[i] = std::exp(-0.5 * k * k / (sigma * sigma));
    gy += g[i] * y[i];
    gg += g[i] * g[i];
    yy += y[i] * y[i];
  }
  return yy - gy * gy / gg;
}

}  // namespace

PovmSet::PovmSet(const DetectorMatrix& v) : elements_(v.matrix()) {}

PovmSet povm_from_matrix(const DetectorMatrix& v) { return PovmSet(v); }

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  if (points == 0) return {};
  if (points == 1) return {lo};
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return out;
}

std::vector<double> default_wigner_axis() { return linspace(-6.0, 6.0, 241); }

std::vector<double> laguerre_all(std::size_t m_max, double z) {
  std::vector<double> l(m_max + 1);
  l[0] = 1.0;
  if (m_max >= 1) l[1] = 1.0 - z;
  for (std::size_t m = 1; m < m_max; ++m) {
    const double md = static_cast<double>(m);
    l[m + 1] = ((2.0 * md + 1.0 - z) * l[m] - md * l[m - 1]) / (md + 1.0);
  }
  return l;
}

double wigner_diagonal(const Eigen::VectorXd& weights, double x, double p) {
  if (weights.size() == 0) return 0.0;
  const double r2 = x * x + p * p;
  const std::vector<double> l = laguerre_all(static_cast<std::size_t>(weights.size()) - 1, 2.0 * r2);
  double sum = 0.0;
  for (Eigen::Index m = 0; m < weights.size(); ++m) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    sum += weights(m) * sign * l[static_cast<std::size_t>(m)];
  }
  return sum * std::exp(-r2) / std::numbers::pi;
}

WignerGrid wigner(const PovmSet& povm, std::size_t n, const std::vector<double>& x_axis,
                  const std::vector<double>& p_axis) {
  if (n >= povm.size()) throw std::out_of_range("wigner: outcome index beyond n_max");
  for (double x : x_axis) {
    if (!std::isfinite(x)) throw std::invalid_argument("wigner: non-finite axis value");
  }
  for (double p : p_axis) {
    if (!std::isfinite(p)) throw std::invalid_argument("wigner: non-finite axis value");
  }
  WignerGrid grid{n, x_axis, p_axis,
                  Eigen::MatrixXd(static_cast<Eigen::Index>(x_axis.size()),
                                  static_cast<Eigen::Index>(p_axis.size()))};
  const Eigen::VectorXd w = povm.element(n);
  for (std::size_t i = 0; i < x_axis.size(); ++i) {
    for (std::size_t k = 0; k < p_axis.size(); ++k) {
      grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          wigner_diagonal(w, x_axis[i], p_axis[k]);
    }
  }
  return grid;
}

double wigner_negativity(const WignerGrid& grid) {
  if (grid.values.size() == 0) throw std::invalid_argument("wigner_negativity: empty grid");
  return grid.values.minCoeff();
}

double ResolutionStats::at(int k) const {
  const long i = static_cast<long>(k) - k_min;
  if (i < 0 || i >= static_cast<long>(offset_dist.size())) return 0.0;
  return offset_dist[static_cast<std::size_t>(i)];
}

ProbVector arrival_distribution(std::size_t dim, const DiagonalState& rho, const RabiParams& params,
                                const std::vector<double>& times_us) {
  if (times_us.empty()) throw std::invalid_argument("arrival_distribution: no times");
  std::vector<double> sum(dim, 0.0);
  for (double t : times_us) {
    const ProbVector p = ideal_distribution(rho, params, t).resized(dim);
    for (std::size_t m = 0; m < dim; ++m) sum[m] += p[m];
  }
  return ProbVector::from_weights(std::move(sum));
}

ResolutionStats resolution_stats(const DetectorMatrix& v, const ProbVector& arrivals) {
  const ProbVector pm = arrivals.resized(v.dim());
  const auto d = static_cast<int>(v.dim());
  ResolutionStats stats;
  stats.k_min = -(d - 1);
  stats.offset_dist.assign(static_cast<std::size_t>(2 * d - 1), 0.0);
  for (int m = 0; m < d; ++m) {
    const double w = pm[static_cast<std::size_t>(m)];
    if (w == 0.0) continue;
    for (int n = 0; n < d; ++n) {
      stats.offset_dist[static_cast<std::size_t>(n - m - stats.k_min)] +=
          v(static_cast<std::size_t>(n), static_cast<std::size_t>(m)) * w;
    }
  }
  stats.diagonal_mass = stats.at(0);
  stats.sigma = fit_offset_sigma(stats);
  return stats;
}

ResolutionStats resolution_stats(const DetectorMatrix& v, const DiagonalState& rho,
                                 const RabiParams& params, const std::vector<double>& times_us) {
  return resolution_stats(v, arrival_distribution(v.dim(), rho, params, times_us));
}

double fit_offset_sigma(const ResolutionStats& stats) {
  std::array<double, 4> y{};
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = stats.at(kSigmaFitOffsets[i]);
  if (y[1] + y[2] + y[3] <= 0.0) return 0.0;
  // Scan log(sigma) for the basin, then polish with Brent.
  constexpr int kScan = 400;
  const double lo = std::log(0.05), hi = std::log(20.0);
  double best = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < kScan; ++i) {
    const double s = std::exp(lo + (hi - lo) * i / (kScan - 1));
    const double r = sigma_fit_residual(y, s);
    if (r < best) {
      best = r;
      best_i = i;
    }
  }
  const double step = (hi - lo) / (kScan - 1);
  const double log_s = boost::math::tools::brent_find_minima(
      [&](double ls) { return sigma_fit_residual(y, std::exp(ls)); },
      std::max(lo, lo + (best_i - 1) * step), std::min(hi, lo + (best_i + 1) * step), 40).first;
  return std::exp(log_s);
}

double assignment_fidelity(const DetectorMatrix& v, std::size_t m) {
  if (m >= v.dim()) throw std::out_of_range("assignment_fidelity: m beyond n_max");
  return v(m, m);
}

DetectedDistribution detected_distribution(const DetectorMatrix& v, const DiagonalState& rho,
                                           double theta) {
  const auto dim = static_cast<Eigen::Index>(v.dim());
  const double p = transfer_prob_theta(theta);
  const double dp_dtheta = 0.5 * std::sin(theta);
  Eigen::VectorXd ideal = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd d_ideal = Eigen::VectorXd::Zero(dim);
  for (std::size_t n = 0; n < rho.size(); ++n) {
    const double w = rho[n];
    if (w == 0.0) continue;
    const std::vector<double> b = binomial_pmf(n, p);
    const std::vector<double> db = binomial_pmf_dp(n, p);
    for (std::size_t m = 0; m <= n; ++m) {
      const Eigen::Index row = std::min<Eigen::Index>(static_cast<Eigen::Index>(m), dim - 1);
      ideal(row) += w * b[m];
      d_ideal(row) += w * db[m] * dp_dtheta;
    }
  }
  return {v.matrix() * ideal, v.matrix() * d_ideal};
}

double fisher_information(const DetectorMatrix& v, const DiagonalState& rho, double theta) {
  const DetectedDistribution d = detected_distribution(v, rho, theta);
  double f = 0.0;
  for (Eigen::Index n = 0; n < d.p.size(); ++n) {
    f += d.dp_dtheta(n) * d.dp_dtheta(n) / std::max(d.p(n), kFisherFloor);
  }
  return f;
}

}  // namespace qdt
