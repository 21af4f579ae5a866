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

// Physical characterization of a reconstructed detector: POVM elements, their
// Wigner functions, the offset statistics P(n - m) and the Fisher information
// of a Rabi rotation read out through V.

#ifndef QDT_ANALYSIS_HPP_
#define QDT_ANALYSIS_HPP_

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qdt/prob.hpp"
#include "qdt/rabi.hpp"

namespace qdt {

/// Fock-diagonal POVM: element n has diagonal weights V(n, m) over m.
class PovmSet {
 public:
  explicit PovmSet(const DetectorMatrix& v);

  std::size_t size() const { return static_cast<std::size_t>(elements_.rows()); }
  /// Diagonal of element n (row n of V).
  Eigen::VectorXd element(std::size_t n) const { return elements_.row(static_cast<Eigen::Index>(n)).transpose(); }
  /// Sum of all elements; the identity up to rounding.
  Eigen::VectorXd completeness() const { return elements_.colwise().sum().transpose(); }

 private:
  Eigen::MatrixXd elements_;
};

PovmSet povm_from_matrix(const DetectorMatrix& v);

struct WignerGrid {
  std::size_t n = 0;
  std::vector<double> x_axis;
  std::vector<double> p_axis;
  Eigen::MatrixXd values;  // values(i, k) = W(x_axis[i], p_axis[k])
};

/// `points` evenly spaced values on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t points);

/// Default phase-space axis: [-6, 6] with 241 points.
std::vector<double> default_wigner_axis();

/// Laguerre polynomials L_0(z)..L_{m_max}(z) by the three-term recurrence.
std::vector<double> laguerre_all(std::size_t m_max, double z);

/// W of a Fock-diagonal operator with weights w_m at radius^2 = x^2 + p^2.
double wigner_diagonal(const Eigen::VectorXd& weights, double x, double p);

WignerGrid wigner(const PovmSet& povm, std::size_t n, const std::vector<double>& x_axis,
                  const std::vector<double>& p_axis);

/// Minimum over the grid; negative means the element has no classical analog.
double wigner_negativity(const WignerGrid& grid);

struct ResolutionStats {
  int k_min = 0;                    // offset of offset_dist[0]
  std::vector<double> offset_dist;  // P(k) for k = k_min, k_min + 1, ...
  double diagonal_mass = 0.0;       // P(0)
  double sigma = 0.0;               // Gaussian width fitted on k = 0, -1, -2, -3

  double at(int k) const;
};

/// Normalized P_m = sum_j P_id(m | t_j), folded into the outcome range of v.
ProbVector arrival_distribution(std::size_t dim, const DiagonalState& rho, const RabiParams& params,
                                const std::vector<double>& times_us);

/// P(k) = sum_m V(m + k, m) P_m for an explicit arrival distribution.
ResolutionStats resolution_stats(const DetectorMatrix& v, const ProbVector& arrivals);

ResolutionStats resolution_stats(const DetectorMatrix& v, const DiagonalState& rho,
                                 const RabiParams& params, const std::vector<double>& times_us);

/// Least-squares fit of A exp(-k^2 / 2 sigma^2) to P(k) on k = 0, -1, -2, -3.
/// Returns 0 when no mass sits at k < 0.
double fit_offset_sigma(const ResolutionStats& stats);

/// V(m, m): the probability that m arrivals are reported as m.
double assignment_fidelity(const DetectorMatrix& v, std::size_t m);

/// P_V(n | theta) and its analytic theta derivative.
struct DetectedDistribution {
  Eigen::VectorXd p;
  Eigen::VectorXd dp_dtheta;
};

DetectedDistribution detected_distribution(const DetectorMatrix& v, const DiagonalState& rho,
                                           double theta);

/// F(theta) = sum_n (dP_V/dtheta)^2 / max(P_V, 1e-12).
double fisher_information(const DetectorMatrix& v, const DiagonalState& rho, double theta);

}  // namespace qdt

#endif  // QDT_ANALYSIS_HPP_
