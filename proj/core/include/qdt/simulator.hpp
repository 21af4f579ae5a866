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

#ifndef QDT_SIMULATOR_HPP_
#define QDT_SIMULATOR_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "qdt/prob.hpp"
#include "qdt/rabi.hpp"

namespace qdt {

/// How the counting-noise Gaussian is discretized onto integer offsets.
enum class BlurKernel {
  /// Weights exp(-d^2 / 2 sigma^2) sampled at integer offsets d, normalized.
  kPointSampled,
  /// Mass of N(0, sigma^2) in the unit bin [d - 1/2, d + 1/2].
  kBinIntegrated,
};

struct SyntheticDetectorSpec {
  double sigma = 0.0;
  DarkCountModel dark{};
  double loss = 0.0;
  std::size_t n_max = 59;
  BlurKernel kernel = BlurKernel::kPointSampled;

  void validate() const;
};

/// Ground-truth detector. Column m: binomial loss thinning of m, then integer
/// Gaussian blur (negative outcomes land on 0), then Poisson dark counts;
/// mass beyond n_max is folded into row n_max.
DetectorMatrix build_detector(const SyntheticDetectorSpec& spec);

/// Grows a detector to `dim` by translating the offset profile of the last
/// column to every new column (tail folded at the new boundary). Columns that
/// already exist are copied unchanged.
DetectorMatrix extend_detector(const DetectorMatrix& v, std::size_t dim);

struct ExperimentPlan {
  std::vector<double> times_us;
  std::uint64_t shots_per_time = 1;
  RabiParams rabi{1.0};
  DiagonalState state;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Sequential-binomial multinomial draw of `shots` outcomes from `p`.
std::vector<std::uint64_t> sample_multinomial(const ProbVector& p, std::uint64_t shots,
                                              std::mt19937_64& rng);

/// Draws shots_per_time outcomes per time from P_V(n | t_j). Time j uses the
/// stream mt19937_64(rng_seed + j), so the result is reproducible per seed.
/// Trailing outcome bins that are empty at every time are dropped.
HistogramDataset sample_dataset(const ExperimentPlan& plan, const DetectorMatrix& v);

/// Noiseless dataset: histograms are exactly P_V(n | t_j), with a nominal shot
/// count attached.
HistogramDataset exact_dataset(const std::vector<double>& times_us, const RabiParams& rabi,
                               const DiagonalState& state, const DetectorMatrix& v,
                               std::uint64_t nominal_shots = 1000000);

}  // namespace qdt

#endif  // QDT_SIMULATOR_HPP_
