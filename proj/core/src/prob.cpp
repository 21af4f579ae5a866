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

#include "qdt/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qdt {
namespace {

constexpr double kClampNegative = 1e-12;
constexpr double kAcceptSum = 1e-6;

double checked_sum(std::vector<double>& v, const char* what) {
  double sum = 0.0;
  for (double& x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + ": non-finite entry");
    }
    if (x < 0.0) {
      if (x < -kClampNegative) {
        throw std::invalid_argument(std::string(what) + ": negative entry " + std::to_string(x));
      }
      x = 0.0;
    }
    sum += x;
  }
  return sum;
}

}  // namespace

ProbVector::ProbVector(std::vector<double> entries) : p_(std::move(entries)) {
  if (p_.empty()) return;
  const double sum = checked_sum(p_, "ProbVector");
  if (std::abs(sum - 1.0) > kAcceptSum) {
    throw std::invalid_argument("ProbVector: entries sum to " + std::to_string(sum));
  }
  for (double& x : p_) x /= sum;
}

ProbVector ProbVector::from_weights(std::vector<double> weights) {
  const double sum = checked_sum(weights, "ProbVector::from_weights");
  if (!(sum > 0.0)) throw std::invalid_argument("ProbVector::from_weights: zero total weight");
  for (double& x : weights) x /= sum;
  return ProbVector(std::move(weights));
}

ProbVector ProbVector::delta(std::size_t size, std::size_t index) {
  if (index >= size) throw std::out_of_range("ProbVector::delta: index beyond size");
  std::vector<double> p(size, 0.0);
  p[index] = 1.0;
  return ProbVector(std::move(p));
}

double ProbVector::mean() const {
  double m = 0.0;
  for (std::size_t n = 0; n < p_.size(); ++n) m += static_cast<double>(n) * p_[n];
  return m;
}

double ProbVector::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t n = 0; n < p_.size(); ++n) {
    const double d = static_cast<double>(n) - m;
    v += d * d * p_[n];
  }
  return v;
}

ProbVector ProbVector::resized(std::size_t size) const {
  if (size == 0) throw std::invalid_argument("ProbVector::resized: zero size");
  std::vector<double> out(size, 0.0);
  for (std::size_t n = 0; n < p_.size(); ++n) out[std::min(n, size - 1)] += p_[n];
  return ProbVector(std::move(out));
}

double hellinger_sq(const ProbVector& p, const ProbVector& q) {
  const std::size_t len = std::max(p.size(), q.size());
  double d = 0.0;
  for (std::size_t n = 0; n < len; ++n) {
    const double diff = std::sqrt(p[n]) - std::sqrt(q[n]);
    d += diff * diff;
  }
  return d;
}

double fidelity(const ProbVector& p, const ProbVector& q) {
  const std::size_t len = std::min(p.size(), q.size());
  double f = 0.0;
  for (std::size_t n = 0; n < len; ++n) f += std::sqrt(p[n] * q[n]);
  return std::min(f, 1.0);
}

std::vector<double> simplex_project(std::span<const double> x) {
  if (x.empty()) return {};
  for (double xi : x) {
    if (!std::isfinite(xi)) throw std::invalid_argument("simplex_project: non-finite input");
  }
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) tau = candidate;
  }
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::max(x[i] - tau, 0.0);
    sum += out[i];
  }
  // Round-off cleanup so the sum-to-one residual stays at machine precision.
  for (double& v : out) v /= sum;
  return out;
}

ProbVector simplex_project_prob(std::span<const double> x) {
  return ProbVector(simplex_project(x));
}

DetectorMatrix::DetectorMatrix(Eigen::MatrixXd v) : v_(std::move(v)) {
  if (v_.rows() != v_.cols() || v_.rows() == 0) {
    throw std::invalid_argument("DetectorMatrix: must be square and non-empty");
  }
  for (Eigen::Index m = 0; m < v_.cols(); ++m) {
    double sum = 0.0;
    for (Eigen::Index n = 0; n < v_.rows(); ++n) {
      double& x = v_(n, m);
      if (!std::isfinite(x) || x < -kClampNegative) {
        throw std::invalid_argument("DetectorMatrix: invalid entry at (" + std::to_string(n) +
                                    ", " + std::to_string(m) + ")");
      }
      x = std::max(x, 0.0);
      sum += x;
    }
    if (std::abs(sum - 1.0) > kAcceptSum) {
      throw std::invalid_argument("DetectorMatrix: column " + std::to_string(m) +
                                  " sums to " + std::to_string(sum));
    }
    v_.col(m) /= sum;
  }
}

DetectorMatrix DetectorMatrix::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return DetectorMatrix(Eigen::MatrixXd::Identity(d, d));
}

ProbVector DetectorMatrix::apply(const ProbVector& p) const {
  const std::size_t d = dim();
  Eigen::VectorXd folded = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t m = 0; m < p.size(); ++m) {
    folded(static_cast<Eigen::Index>(std::min(m, d - 1))) += p[m];
  }
  const Eigen::VectorXd out = v_ * folded;
  return ProbVector(std::vector<double>(out.data(), out.data() + out.size()));
}

Eigen::VectorXd DetectorMatrix::column_mean() const {
  const Eigen::VectorXd n = Eigen::VectorXd::LinSpaced(v_.rows(), 0.0, double(v_.rows() - 1));
  return v_.transpose() * n;
}

Eigen::VectorXd DetectorMatrix::column_second_moment() const {
  const Eigen::VectorXd n = Eigen::VectorXd::LinSpaced(v_.rows(), 0.0, double(v_.rows() - 1));
  return v_.transpose() * n.cwiseProduct(n);
}

DiagonalState DiagonalState::fock(std::size_t n_total) {
  return DiagonalState(ProbVector::delta(n_total + 1, n_total));
}

DiagonalState DiagonalState::gaussian(double mean, double std_n, double width_sigmas,
                                      std::optional<std::size_t> n_hi) {
  if (!(mean >= 0.0) || !(std_n >= 0.0)) {
    throw std::invalid_argument("DiagonalState::gaussian: mean and std must be >= 0");
  }
  if (std_n == 0.0) {
    const auto n0 = static_cast<std::size_t>(std::llround(mean));
    const std::size_t size = std::max(n0 + 1, n_hi.value_or(0) + 1);
    return DiagonalState(ProbVector::delta(size, n0));
  }
  const auto top = static_cast<std::size_t>(std::ceil(mean + width_sigmas * std_n));
  const std::size_t last = n_hi ? std::max(*n_hi, top) : top;
  const double lo = mean - width_sigmas * std_n;
  std::vector<double> w(last + 1, 0.0);
  for (std::size_t n = 0; n <= top; ++n) {
    const double x = static_cast<double>(n);
    if (x < lo) continue;
    const double z = (x - mean) / std_n;
    w[n] = std::exp(-0.5 * z * z);
  }
  return DiagonalState(ProbVector::from_weights(std::move(w)));
}

DiagonalState DiagonalState::poisson(double mean, double width_sigmas) {
  if (!(mean > 0.0)) throw std::invalid_argument("DiagonalState::poisson: mean must be > 0");
  const auto top =
      static_cast<std::size_t>(std::ceil(mean + width_sigmas * std::sqrt(mean) + 10.0));
  std::vector<double> w(top + 1);
  for (std::size_t n = 0; n <= top; ++n) {
    const double k = static_cast<double>(n);
    w[n] = std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
  }
  return DiagonalState(ProbVector::from_weights(std::move(w)));
}

HistogramDataset::HistogramDataset(std::vector<double> times_us,
                                   std::vector<ProbVector> histograms,
                                   std::vector<std::uint64_t> shot_counts)
    : times_(std::move(times_us)), hists_(std::move(histograms)), shots_(std::move(shot_counts)) {
  validate();
  // Common support length so every consumer sees aligned outcome indices.
  std::size_t len = 0;
  for (const auto& h : hists_) len = std::max(len, h.size());
  for (auto& h : hists_) {
    if (h.size() < len) h = h.resized(len);
  }
}

HistogramDataset HistogramDataset::from_counts(std::vector<double> times_us,
                                               std::vector<std::vector<std::uint64_t>> counts) {
  if (times_us.size() != counts.size()) {
    throw std::invalid_argument("HistogramDataset: times/counts length mismatch");
  }
  std::size_t len = 0;
  for (const auto& c : counts) len = std::max(len, c.size());
  std::vector<ProbVector> hists;
  std::vector<std::uint64_t> shots;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    counts[j].resize(len, 0);
    std::uint64_t total = 0;
    for (auto c : counts[j]) total += c;
    if (total == 0) {
      throw std::invalid_argument("HistogramDataset: no shots at time index " + std::to_string(j));
    }
    std::vector<double> w(counts[j].begin(), counts[j].end());
    hists.push_back(ProbVector::from_weights(std::move(w)));
    shots.push_back(total);
  }
  HistogramDataset d(std::move(times_us), std::move(hists), std::move(shots));
  d.counts_ = std::move(counts);
  return d;
}

void HistogramDataset::validate() const {
  if (times_.size() != hists_.size() || times_.size() != shots_.size()) {
    throw std::invalid_argument("HistogramDataset: inconsistent lengths");
  }
  for (std::size_t j = 0; j < times_.size(); ++j) {
    if (!std::isfinite(times_[j]) || times_[j] < 0.0) {
      throw std::invalid_argument("HistogramDataset: invalid time at index " + std::to_string(j));
    }
    if (j > 0 && !(times_[j] > times_[j - 1])) {
      throw std::invalid_argument("HistogramDataset: times must be strictly increasing (index " +
                                  std::to_string(j) + ")");
    }
    if (shots_[j] < 1) {
      throw std::invalid_argument("HistogramDataset: shot count must be >= 1");
    }
    if (hists_[j].empty()) throw std::invalid_argument("HistogramDataset: empty histogram");
  }
}

std::size_t HistogramDataset::max_observed() const {
  std::size_t top = 0;
  for (const auto& h : hists_) {
    for (std::size_t n = h.size(); n-- > 0;) {
      if (h[n] > 0.0) {
        top = std::max(top, n);
        break;
      }
    }
  }
  return top;
}

HistogramDataset HistogramDataset::without(std::size_t j) const {
  if (j >= size()) throw std::out_of_range("HistogramDataset::without: index out of range");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < size(); ++i) {
    if (i != j) keep.push_back(i);
  }
  return subset(keep);
}

HistogramDataset HistogramDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  std::vector<double> t;
  std::vector<ProbVector> h;
  std::vector<std::uint64_t> s;
  std::vector<std::vector<std::uint64_t>> c;
  for (std::size_t i : idx) {
    if (i >= size()) throw std::out_of_range("HistogramDataset::subset: index out of range");
    t.push_back(times_[i]);
    h.push_back(hists_[i]);
    s.push_back(shots_[i]);
    if (has_counts()) c.push_back(counts_[i]);
  }
  HistogramDataset d(std::move(t), std::move(h), std::move(s));
  d.counts_ = std::move(c);
  return d;
}

}  // namespace qdt
