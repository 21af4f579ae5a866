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

#include "qdt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qdt {
namespace {

// Integer offsets d in [-reach, reach] with their blur weights.
std::vector<double> blur_weights(double sigma, BlurKernel kernel, int& reach) {
  if (sigma == 0.0) {
    reach = 0;
    return {1.0};
  }
  reach = static_cast<int>(std::ceil(10.0 * sigma)) + 1;
  std::vector<double> w(static_cast<std::size_t>(2 * reach + 1));
  for (int d = -reach; d <= reach; ++d) {
    double v = 0.0;
    if (kernel == BlurKernel::kPointSampled) {
      v = std::exp(-0.5 * d * d / (sigma * sigma));
    } else {
      const double s = sigma * std::sqrt(2.0);
      v = 0.5 * (std::erf((d + 0.5) / s) - std::erf((d - 0.5) / s));
    }
    w[static_cast<std::size_t>(d + reach)] = v;
  }
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  return w;
}

std::vector<double> fold_to(std::vector<double> p, std::size_t dim) {
  if (p.size() > dim) {
    for (std::size_t n = dim; n < p.size(); ++n) p[dim - 1] += p[n];
    p.resize(dim);
  } else {
    p.resize(dim, 0.0);
  }
  return p;
}

}  // namespace

void SyntheticDetectorSpec::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("SyntheticDetectorSpec: sigma must be >= 0");
  }
  if (!(loss >= 0.0 && loss <= 1.0)) {
    throw std::invalid_argument("SyntheticDetectorSpec: loss must be in [0, 1]");
  }
  if (dark.mean_dark < 0.0) throw std::invalid_argument("SyntheticDetectorSpec: mean_dark < 0");
}

DetectorMatrix build_detector(const SyntheticDetectorSpec& spec) {
  spec.validate();
  const std::size_t dim = spec.n_max + 1;
  int reach = 0;
  const std::vector<double> blur = blur_weights(spec.sigma, spec.kernel, reach);
  std::vector<double> dark{1.0};
  if (spec.dark.mean_dark > 0.0) {
    const double lam = spec.dark.mean_dark;
    dark = poisson_pmf(lam, static_cast<std::size_t>(std::ceil(lam + 12.0 * std::sqrt(lam) + 12.0)));
  }

  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
  for (std::size_t m = 0; m < dim; ++m) {
    const std::vector<double> kept = binomial_pmf(m, 1.0 - spec.loss);
    std::vector<double> blurred(m + static_cast<std::size_t>(reach) + 1, 0.0);
    for (std::size_t k = 0; k < kept.size(); ++k) {
      if (kept[k] == 0.0) continue;
      for (int d = -reach; d <= reach; ++d) {
        const long target = static_cast<long>(k) + d;
        blurred[static_cast<std::size_t>(std::max(target, 0L))] +=
            kept[k] * blur[static_cast<std::size_t>(d + reach)];
      }
    }
    const std::vector<double> col = fold_to(convolve(blurred, dark), dim);
    for (std::size_t n = 0; n < dim; ++n) {
      v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = col[n];
    }
  }
  return DetectorMatrix(std::move(v));
}

DetectorMatrix extend_detector(const DetectorMatrix& v, std::size_t dim) {
  if (dim <= v.dim()) return v;
  const auto old_dim = static_cast<Eigen::Index>(v.dim());
  const auto new_dim = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(new_dim, new_dim);
  out.topLeftCorner(old_dim, old_dim) = v.matrix();
  const Eigen::Index last = old_dim - 1;
  for (Eigen::Index m = old_dim; m < new_dim; ++m) {
    const Eigen::Index shift = m - last;
    for (Eigen::Index n = 0; n < old_dim; ++n) {
      out(std::min(n + shift, new_dim - 1), m) += v.matrix()(n, last);
    }
  }
  // The old boundary row absorbed folded tails; those stay where they are.
  return DetectorMatrix(std::move(out));
}

void ExperimentPlan::validate() const {
  if (times_us.empty()) throw std::invalid_argument("ExperimentPlan: no times");
  if (shots_per_time < 1) throw std::invalid_argument("ExperimentPlan: shots_per_time must be >= 1");
  if (state.size() == 0) throw std::invalid_argument("ExperimentPlan: empty state");
}

std::vector<std::uint64_t> sample_multinomial(const ProbVector& p, std::uint64_t shots,
                                              std::mt19937_64& rng) {
  std::vector<std::uint64_t> out(p.size(), 0);
  std::uint64_t remaining = shots;
  double mass_left = 1.0;
  for (std::size_t n = 0; n < p.size() && remaining > 0; ++n) {
    if (n + 1 == p.size() || mass_left <= 0.0) {
      out[n] = remaining;
      remaining = 0;
      break;
    }
    const double q = std::clamp(p[n] / mass_left, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> draw(remaining, q);
    out[n] = draw(rng);
    remaining -= out[n];
    mass_left -= p[n];
  }
  return out;
}

HistogramDataset sample_dataset(const ExperimentPlan& plan, const DetectorMatrix& v) {
  plan.validate();
  std::vector<std::vector<std::uint64_t>> counts;
  std::size_t used = 1;
  for (std::size_t j = 0; j < plan.times_us.size(); ++j) {
    const ProbVector pv = v.apply(ideal_distribution(plan.state, plan.rabi, plan.times_us[j]));
    std::mt19937_64 rng(plan.rng_seed + j);
    counts.push_back(sample_multinomial(pv, plan.shots_per_time, rng));
    for (std::size_t n = counts.back().size(); n-- > 0;) {
      if (counts.back()[n] > 0) {
        used = std::max(used, n + 1);
        break;
      }
    }
  }
  for (auto& c : counts) c.resize(used);
  return HistogramDataset::from_counts(plan.times_us, std::move(counts));
}

HistogramDataset exact_dataset(const std::vector<double>& times_us, const RabiParams& rabi,
                               const DiagonalState& state, const DetectorMatrix& v,
                               std::uint64_t nominal_shots) {
  std::vector<ProbVector> hists;
  for (double t : times_us) hists.push_back(v.apply(ideal_distribution(state, rabi, t)));
  return HistogramDataset(times_us, std::move(hists),
                          std::vector<std::uint64_t>(times_us.size(), nominal_shots));
}

}  // namespace qdt
