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

// Phase sensitivity of squeezed two-mode states read out by counting one
// level through a detector V.
//
// Conventions, for N atoms (spin j = N/2) in the number basis m = n_a:
//   J_z = m - N/2, and (J_x)_{m+1,m} = sqrt((m + 1)(N - m)) / 2.
//   The squeezed state is d(pi/2) c with d(b) = exp(-i b J_y) and
//   c_m ~ exp(-mu^2 / (N s)), mu = m - N/2, so 4 Var(J_x) = s N and the mean
//   spin points to -z (all atoms in level b).
//   A phase theta rotates the state by d(theta), so theta = 0 leaves every
//   atom in b and <n_a> = N sin^2(theta / 2) for s = 1.

#ifndef QDT_METROLOGY_HPP_
#define QDT_METROLOGY_HPP_

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qdt/prob.hpp"

namespace qdt {

/// Largest sector handled by dense diagonalization.
inline constexpr std::size_t kMaxSectorAtoms = 400;

Eigen::MatrixXd jx_matrix(std::size_t n_total);

/// Gaussian envelope c over J_z eigenvalues, normalized.
Eigen::VectorXd squeezed_envelope(double s, std::size_t n_total);

/// Eigen-decomposition of J_x for one N. Eigenvalues are k - N/2, ascending.
class SpinSector {
 public:
  explicit SpinSector(std::size_t n_total);

  std::size_t n_total() const { return n_total_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const Eigen::MatrixXd& eigenvectors() const { return u_; }

  /// Coordinates of exp(-i b J_y) x in the J_x eigenbasis after stripping
  /// the diagonal phase that maps J_x onto J_y.
  Eigen::VectorXcd spectral_weights(const Eigen::VectorXd& x) const;

  /// exp(-i b J_y) x for real x (the result is real).
  Eigen::VectorXd rotate(const Eigen::VectorXd& x, double beta) const;

 private:
  std::size_t n_total_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd u_;
};

/// exp(-i b J_y) as a dense real matrix.
Eigen::MatrixXd jy_rotation(std::size_t n_total, double beta);

/// |psi(s, N)> in the number basis (index m = n_a).
Eigen::VectorXd build_squeezed_state(double s, std::size_t n_total);

struct SqueezedEnsemble {
  double s = 1.0;
  DiagonalState rho;

  void validate() const;

  /// Gaussian rho over N truncated at width_sigmas; dn = 0 gives a single N.
  static SqueezedEnsemble gaussian(double s, double n_mean, double dn, double width_sigmas = 6.0);
};

/// Distribution of n_a after the phase rotation, mixed over rho.
ProbVector rotated_number_distribution(const SqueezedEnsemble& ensemble, double theta);

struct NumberMoments {
  double mean = 0.0;
  double second = 0.0;
  double variance() const { return second - mean * mean; }
};

/// <n_a> and <n_a^2> for one N with ideal counting, from J_z and J_x
/// moments of the envelope (O(N), no diagonalization).
NumberMoments ideal_number_moments(double s, std::size_t n_total, double theta);

/// (Delta theta)^2 = Var(n) / (d<n>/dtheta)^2 for the detected count n.
/// v == nullptr means ideal counting; a detector smaller than the largest N
/// is extended by translating its last column. Throws std::domain_error when
/// the derivative vanishes.
double phase_sensitivity(const SqueezedEnsemble& ensemble, double theta,
                         const DetectorMatrix* v = nullptr);

struct SensitivityOptimum {
  double theta = 0.0;
  double dtheta2 = 0.0;
  double gain = 0.0;  // 1 / (<N> dtheta2)
};

/// Minimizes (Delta theta)^2 over theta on a 400-point grid in (0, pi),
/// refined with Brent's method around the best grid point.
SensitivityOptimum optimize_theta(const SqueezedEnsemble& ensemble,
                                  const DetectorMatrix* v = nullptr);

struct GainMap {
  double n_mean = 0.0;
  std::vector<double> s_axis;
  std::vector<double> dn_axis;
  Eigen::MatrixXd gain;       // gain(i, k) at s_axis[i], dn_axis[k]
  Eigen::MatrixXd theta_opt;  // optimal phase per cell
};

/// Log grid s in [0.01, 1], 60 points.
std::vector<double> default_s_axis();

GainMap gain_map(double n_mean, const DetectorMatrix* v, const std::vector<double>& s_axis,
                 const std::vector<double>& dn_axis, int jobs = 1);

struct ScalingPoint {
  double n_mean = 0.0;
  double gain = 0.0;
  double s_opt = 0.0;
  double theta_opt = 0.0;
};

/// Gain optimized over s (grid, then Brent in log s) with dn = sqrt(n_mean)
/// and rho truncated at 5 sigma.
std::vector<ScalingPoint> gain_scaling(const DetectorMatrix* v, const std::vector<double>& n_axis,
                                       const std::vector<double>& s_axis, int jobs = 1);

double gain_db(double gain);

/// Slope of the least-squares line through (log x, log y).
double power_law_exponent(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qdt

#endif  // QDT_METROLOGY_HPP_
