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

// Joint reconstruction of the detector response V, the diagonal input state
// rho_N and the Rabi frequency from count histograms recorded after pulses of
// different durations.
//
// The model is P_V(n | t) = sum_m V(n, m) P_id(m | t), fitted by minimizing
// the summed squared Hellinger distance to the measured histograms. The
// optimizer is block-coordinate projected gradient descent: a run of V steps,
// then rho steps, then omega steps, repeated until the cost reaches the
// cutoff. Every V column and rho are projected back onto the simplex after
// each step, and every accepted step strictly lowers the cost (backtracking).

#ifndef QDT_TOMOGRAPHY_HPP_
#define QDT_TOMOGRAPHY_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdt/prob.hpp"
#include "qdt/rabi.hpp"

namespace qdt {

enum class CostKind { kHellinger, kKullbackLeibler };

const char* to_string(CostKind kind);
CostKind cost_kind_from_string(const std::string& name);

struct TomographyConfig {
  double cost_cutoff = 0.01;
  int max_outer_iters = 3000;
  int inner_iters_v = 50;
  int inner_iters_rho = 20;
  int inner_iters_omega = 5;
  // Initial trial steps; each block adapts its own step by backtracking.
  double step_v = 0.1;
  double step_rho = 0.01;
  double step_omega = 1e-3;  // in log(omega)
  std::uint64_t rng_seed = 1;
  int bootstrap_replicas = 20;
  CostKind cost_kind = CostKind::kHellinger;
  int jobs = 1;

  void validate() const;
};

/// Floor applied to model probabilities inside square roots and ratios.
inline constexpr double kProbabilityFloor = 1e-12;

/// Raised when the initialization fits cannot be trusted.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, double rms_residual)
      : std::runtime_error(what + " (rms residual " + std::to_string(rms_residual) + ")"),
        rms_residual_(rms_residual) {}
  double rms_residual() const { return rms_residual_; }

 private:
  double rms_residual_;
};

/// Sinusoidal fits of the first two count moments versus pulse duration.
struct MomentFits {
  double mean_n = 0.0;         // amplitude of <n>(t)
  double offset = 0.0;         // C_off
  double frequency_khz = 0.0;  // cyclic, as in sin^2(pi f t)
  double delta_n = 0.0;        // width of the total-number Gaussian
  std::array<double, 5> b{};   // <n^2>(t) = sum_k b_k sin^k(pi f t)
  double mean_rms_residual = 0.0;
  double second_rms_residual = 0.0;
  bool delta_n_fallback = false;  // width fit unusable; sqrt(mean_n) used
};

struct InitialGuess {
  DiagonalState rho;
  RabiParams rabi{1.0};
  DetectorMatrix v;
  MomentFits fits;
};

/// Gaussian rho from the moment fits, omega from the mean fit (converted to
/// the angular convention), and a uniformly random column-stochastic V drawn
/// from `rng_seed`. The fits never touch the random stream.
InitialGuess init_from_fits(const HistogramDataset& data, std::uint64_t rng_seed,
                            std::optional<std::size_t> n_dim = std::nullopt);

/// P_V(n | t) for the given model, with dim() == v.dim().
ProbVector predict(const DetectorMatrix& v, const DiagonalState& rho, double omega_rad_per_s,
                   double t_us);

/// sum_j d(P_V(. | t_j), P_exp(. | t_j)), d = squared Hellinger by default.
double cost(const DetectorMatrix& v, const DiagonalState& rho, double omega_rad_per_s,
            const HistogramDataset& data, CostKind kind = CostKind::kHellinger);

/// Cost and analytic gradient on raw (not necessarily feasible) parameters.
/// Used by the optimizer; exposed so gradients can be checked externally.
class CostModel {
 public:
  /// `n_dim` outcome bins (V is n_dim x n_dim), rho over N = 0..rho_dim-1.
  CostModel(const HistogramDataset& data, std::size_t n_dim, std::size_t rho_dim,
            CostKind kind = CostKind::kHellinger);

  /// Folded binomial kernels B_j(m, N) and dB_j/domega at one frequency.
  struct Kernels {
    double omega = 0.0;
    std::vector<Eigen::MatrixXd> b;
    std::vector<Eigen::MatrixXd> db_domega;
  };
  Kernels kernels(double omega_rad_per_s) const;

  struct Gradient {
    double value = 0.0;
    Eigen::MatrixXd d_v;
    Eigen::VectorXd d_rho;
    double d_omega = 0.0;
  };

  double value(const Eigen::MatrixXd& v, const Eigen::VectorXd& rho, const Kernels& k) const;
  Gradient gradient(const Eigen::MatrixXd& v, const Eigen::VectorXd& rho, const Kernels& k) const;

  std::size_t n_dim() const { return n_dim_; }
  std::size_t rho_dim() const { return rho_dim_; }
  std::size_t num_times() const { return times_.size(); }

 private:
  double divergence(const Eigen::VectorXd& model, const Eigen::VectorXd& data) const;
  Eigen::VectorXd divergence_grad(const Eigen::VectorXd& model, const Eigen::VectorXd& data) const;

  std::size_t n_dim_;
  std::size_t rho_dim_;
  CostKind kind_;
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> p_exp_;
};

struct TomographyResult {
  DetectorMatrix v;
  DiagonalState rho;
  double omega_rad_per_s = 0.0;
  double final_cost = 0.0;
  std::vector<double> cost_trace;  // one entry per outer iteration
  bool converged = false;
  MomentFits fits;
  double initial_cost = 0.0;
};

enum class Block { kV, kRho, kOmega };

/// Called after every accepted projected step.
using StepObserver = std::function<void(Block, const Eigen::MatrixXd& v, const Eigen::VectorXd& rho,
                                        double omega, double cost)>;

/// Non-convergence is reported through `converged`, never thrown.
TomographyResult reconstruct(const HistogramDataset& data, const TomographyConfig& config,
                             const StepObserver& observer = {});

/// Same, with the outcome dimension pinned (>= max observed + 1).
TomographyResult reconstruct_with_dim(const HistogramDataset& data, const TomographyConfig& config,
                                      std::size_t n_dim, const StepObserver& observer = {});

/// Runs the optimizer from an explicit starting point (e.g. a previous
/// result). The outcome dimension is start.v.dim().
TomographyResult reconstruct_from(const HistogramDataset& data, const TomographyConfig& config,
                                  const InitialGuess& start, const StepObserver& observer = {});

struct SummaryStat {
  double mean = 0.0;
  double std = 0.0;
};

SummaryStat summarize(const std::vector<double>& xs);

struct BootstrapEnsemble {
  std::vector<TomographyResult> replicas;
  SummaryStat omega;
  SummaryStat final_cost;
  Eigen::MatrixXd v_mean, v_std;
  Eigen::VectorXd rho_mean, rho_std;
  std::size_t non_converged = 0;
};

/// Resamples every time from the fitted P_V at the original shot counts and
/// reconstructs each replica. Replica k uses seed rng_seed + k for both the
/// resampling and its own random initial V.
BootstrapEnsemble bootstrap(const TomographyResult& result, const HistogramDataset& data,
                            const TomographyConfig& config);

/// One resampled dataset, as used by bootstrap().
HistogramDataset resample_dataset(const TomographyResult& result, const HistogramDataset& data,
                                  std::uint64_t seed);

struct LearningTestResult {
  std::size_t held_out = 0;
  double time_us = 0.0;
  double fidelity = 0.0;
  ProbVector predicted;
  TomographyResult trained;
};

/// Reconstructs without time j and scores the prediction at t_j against the
/// held-out histogram with the Bhattacharyya fidelity.
LearningTestResult learning_test(const HistogramDataset& data, std::size_t j,
                                 const TomographyConfig& config);

/// learning_test for several indices, run on config.jobs workers.
std::vector<LearningTestResult> learning_tests(const HistogramDataset& data,
                                               const std::vector<std::size_t>& indices,
                                               const TomographyConfig& config);

}  // namespace qdt

#endif  // QDT_TOMOGRAPHY_HPP_
