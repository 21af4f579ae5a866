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

#ifndef QDT_PROB_HPP_
#define QDT_PROB_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qdt {

/// Residual allowed on sum-to-one constraints after construction.
inline constexpr double kNormTolerance = 1e-9;

/// A normalized distribution over a non-negative integer outcome (a count n).
///
/// Entries are validated on construction: each must be finite and >= 0 (tiny
/// negative round-off down to -1e-12 is clamped), and the sum must be within
/// 1e-6 of one. The stored vector is then renormalized exactly, so every
/// ProbVector in circulation sums to one within kNormTolerance.
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> entries);

  /// Normalizes arbitrary non-negative weights (e.g. raw counts).
  static ProbVector from_weights(std::vector<double> weights);
  static ProbVector delta(std::size_t size, std::size_t index);

  std::size_t size() const { return p_.size(); }
  bool empty() const { return p_.empty(); }
  double operator[](std::size_t n) const { return n < p_.size() ? p_[n] : 0.0; }
  std::span<const double> entries() const { return p_; }
  const std::vector<double>& vec() const { return p_; }

  double mean() const;
  double variance() const;

  /// Zero-pads to `size`, or folds the tail mass into the last bin when
  /// shrinking.
  ProbVector resized(std::size_t size) const;

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<double> p_;
};

/// Squared Hellinger distance sum_n (sqrt(p_n) - sqrt(q_n))^2, in [0, 2].
/// The shorter argument is zero-padded.
double hellinger_sq(const ProbVector& p, const ProbVector& q);

/// Bhattacharyya coefficient sum_n sqrt(p_n q_n), in [0, 1].
double fidelity(const ProbVector& p, const ProbVector& q);

/// Euclidean projection onto the probability simplex (sort-and-threshold).
/// Entry order is preserved.
std::vector<double> simplex_project(std::span<const double> x);
ProbVector simplex_project_prob(std::span<const double> x);

/// Column-stochastic response matrix: v(n, m) = P(detect n | m arrive).
class DetectorMatrix {
 public:
  DetectorMatrix() = default;
  /// Validates non-negativity and column sums, then renormalizes columns.
  explicit DetectorMatrix(Eigen::MatrixXd v);

  static DetectorMatrix identity(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(v_.rows()); }
  std::size_t n_max() const { return dim() == 0 ? 0 : dim() - 1; }
  const Eigen::MatrixXd& matrix() const { return v_; }
  double operator()(std::size_t n, std::size_t m) const {
    return v_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  }

  /// P_V(n) = sum_m V(n, m) p(m). Ideal mass beyond n_max is folded into
  /// column n_max; the output always has dim() entries.
  ProbVector apply(const ProbVector& p) const;

  /// sum_n n V(n, m) and sum_n n^2 V(n, m) for every column m.
  Eigen::VectorXd column_mean() const;
  Eigen::VectorXd column_second_moment() const;

 private:
  Eigen::MatrixXd v_;
};

/// Diagonal many-body state: weights rho_N over total atom number N.
class DiagonalState {
 public:
  DiagonalState() = default;
  explicit DiagonalState(std::vector<double> rho) : rho_(std::move(rho)) {}
  explicit DiagonalState(ProbVector rho) : rho_(std::move(rho)) {}

  static DiagonalState fock(std::size_t n_total);

  /// Discretized Gaussian over N >= 0 with the given mean and standard
  /// deviation, truncated at mean + width_sigmas * std_n and renormalized.
  /// std_n == 0 yields a Fock state at round(mean).
  static DiagonalState gaussian(double mean, double std_n, double width_sigmas = 6.0,
                                std::optional<std::size_t> n_hi = std::nullopt);

  /// Poissonian number distribution, truncated at mean + width_sigmas*sqrt(mean).
  static DiagonalState poisson(double mean, double width_sigmas = 8.0);

  std::size_t size() const { return rho_.size(); }
  double operator[](std::size_t n) const { return rho_[n]; }
  const ProbVector& weights() const { return rho_; }
  double mean() const { return rho_.mean(); }
  double variance() const { return rho_.variance(); }

  friend bool operator==(const DiagonalState&, const DiagonalState&) = default;

 private:
  ProbVector rho_;
};

/// Histograms of detected counts at a series of pulse durations.
///
/// Times are in microseconds and strictly increasing. Raw integer counts are
/// retained when the dataset came from counts, so it can be written back out
/// unchanged.
class HistogramDataset {
 public:
  HistogramDataset() = default;
  HistogramDataset(std::vector<double> times_us, std::vector<ProbVector> histograms,
                   std::vector<std::uint64_t> shot_counts);

  static HistogramDataset from_counts(std::vector<double> times_us,
                                      std::vector<std::vector<std::uint64_t>> counts);

  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times_us() const { return times_; }
  const std::vector<ProbVector>& histograms() const { return hists_; }
  const std::vector<std::uint64_t>& shot_counts() const { return shots_; }
  const std::vector<std::vector<std::uint64_t>>& counts() const { return counts_; }
  bool has_counts() const { return !counts_.empty(); }

  /// Largest n with non-zero frequency at any time.
  std::size_t max_observed() const;

  /// Dataset with time index `j` removed.
  HistogramDataset without(std::size_t j) const;

  /// Dataset restricted to the listed time indices (any order; the result is
  /// sorted by time).
  HistogramDataset subset(std::span<const std::size_t> indices) const;

 private:
  void validate() const;

  std::vector<double> times_;
  std::vector<ProbVector> hists_;
  std::vector<std::uint64_t> shots_;
  std::vector<std::vector<std::uint64_t>> counts_;
};

}  // namespace qdt

#endif  // QDT_PROB_HPP_
