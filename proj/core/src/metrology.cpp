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

#include "qdt/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

#include "qdt/parallel.hpp"
#include "qdt/simulator.hpp"

namespace qdt {
namespace {

using cd = std::complex<double>;

constexpr int kThetaGrid = 400;
constexpr double kFdStep = 1e-4;
constexpr double kScalingWidthSigmas = 5.0;
constexpr int kBrentBits = 40;
constexpr double kUnusable = std::numeric_limits<double>::max();

void check_sector(std::size_t n_total) {
  if (n_total > kMaxSectorAtoms) {
    throw std::invalid_argument("sector N = " + std::to_string(n_total) + " exceeds " +
                                std::to_string(kMaxSectorAtoms));
  }
}

// Phase of R = diag(exp(-i pi/2 (m - N/2))), which maps J_x onto J_y.
cd r_phase(std::size_t m, std::size_t n_total) {
  const double arg = -0.5 * std::numbers::pi * (static_cast<double>(m) - 0.5 * static_cast<double>(n_total));
  return std::polar(1.0, arg);
}

// Detected-count moments sum_n n^k V(n, m) for m = 0..n_max.
struct Readout {
  Eigen::VectorXd mu1, mu2;
};

Readout make_readout(const DetectorMatrix* v, std::size_t n_max) {
  const auto size = static_cast<Eigen::Index>(n_max + 1);
  Readout r{Eigen::VectorXd(size), Eigen::VectorXd(size)};
  if (v == nullptr) {
    for (Eigen::Index m = 0; m < size; ++m) {
      r.mu1(m) = static_cast<double>(m);
      r.mu2(m) = static_cast<double>(m * m);
    }
    return r;
  }
  // Extra rows keep the boundary fold away from the columns in use.
  const DetectorMatrix ext = v->dim() > n_max ? *v : extend_detector(*v, n_max + 1 + v->dim());
  Eigen::VectorXd n = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(ext.dim()), 0.0,
                                                 static_cast<double>(ext.dim() - 1));
  const Eigen::VectorXd n2 = n.array().square();
  for (Eigen::Index m = 0; m < size; ++m) {
    r.mu1(m) = ext.matrix().col(m).dot(n);
    r.mu2(m) = ext.matrix().col(m).dot(n2);
  }
  return r;
}

// f(b) = a_0 + 2 Re sum_{d >= 1} a_d exp(i b d).
struct TrigSeries {
  std::vector<cd> a;

  double operator()(double beta) const {
    if (a.empty()) return 0.0;
    const cd step = std::polar(1.0, beta);
    cd phase = step;
    double sum = 0.0;
    for (std::size_t d = 1; d < a.size(); ++d) {
      sum += (a[d] * phase).real();
      phase *= step;
    }
    return a[0].real() + 2.0 * sum;
  }

  void add(const TrigSeries& other, double weight) {
    if (a.size() < other.a.size()) a.resize(other.a.size(), cd(0.0, 0.0));
    for (std::size_t d = 0; d < other.a.size(); ++d) a[d] += weight * other.a[d];
  }
};

// One N with the readout folded into the J_x eigenbasis: G_k = U^T diag(mu_k) U.
struct SectorModel {
  SpinSector sector;
  Eigen::MatrixXd g1, g2;

  SectorModel(std::size_t n_total, const Readout& r) : sector(n_total) {
    const auto size = static_cast<Eigen::Index>(n_total + 1);
    const Eigen::MatrixXd& u = sector.eigenvectors();
    g1 = u.transpose() * r.mu1.head(size).asDiagonal() * u;
    g2 = u.transpose() * r.mu2.head(size).asDiagonal() * u;
  }

  static TrigSeries series(const Eigen::VectorXcd& w, const Eigen::MatrixXd& g) {
    const auto size = w.size();
    TrigSeries t;
    t.a.assign(static_cast<std::size_t>(size), cd(0.0, 0.0));
    for (Eigen::Index d = 0; d < size; ++d) {
      cd acc(0.0, 0.0);
      for (Eigen::Index l = 0; l + d < size; ++l) acc += std::conj(w(l + d)) * w(l) * g(l + d, l);
      t.a[static_cast<std::size_t>(d)] = acc;
    }
    return t;
  }

  std::pair<TrigSeries, TrigSeries> moments(double s) const {
    const Eigen::VectorXcd w =
        sector.spectral_weights(squeezed_envelope(s, sector.n_total()));
    return {series(w, g1), series(w, g2)};
  }
};

// Per-N closed-form ingredients for ideal counting.
struct IdealTerms {
  double half_n = 0.0, quarter_n2 = 0.0;
  double jz = 0.0, jx = 0.0, njz = 0.0, njx = 0.0;
  double jz2 = 0.0, jx2 = 0.0, anti = 0.0;

  static IdealTerms of(double s, std::size_t n_total) {
    IdealTerms t;
    const double n = static_cast<double>(n_total);
    t.half_n = 0.5 * n;
    t.quarter_n2 = 0.25 * n * n;
    if (n_total == 0) return t;
    const Eigen::VectorXd c = squeezed_envelope(s, n_total);
    const auto size = c.size();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(size);
    for (Eigen::Index m = 0; m + 1 < size; ++m) {
      const double off = 0.5 * std::sqrt(static_cast<double>(m + 1) * (n - static_cast<double>(m)));
      y(m) += off * c(m + 1);
      y(m + 1) += off * c(m);
    }
    for (Eigen::Index m = 0; m < size; ++m) {
      const double mu = static_cast<double>(m) - 0.5 * n;
      t.jz += mu * c(m) * c(m);
      t.jz2 += mu * mu * c(m) * c(m);
      t.anti += 2.0 * mu * c(m) * y(m);
    }
    t.jx = c.dot(y);
    t.jx2 = y.squaredNorm();
    t.njz = n * t.jz;
    t.njx = n * t.jx;
    return t;
  }

  void add(const IdealTerms& o, double w) {
    half_n += w * o.half_n;
    quarter_n2 += w * o.quarter_n2;
    jz += w * o.jz;
    jx += w * o.jx;
    njz += w * o.njz;
    njx += w * o.njx;
    jz2 += w * o.jz2;
    jx2 += w * o.jx2;
    anti += w * o.anti;
  }

  // Heisenberg picture: d(b)^dag J_z d(b) = cos(b) J_z - sin(b) J_x.
  NumberMoments at(double theta) const {
    const double beta = theta + 0.5 * std::numbers::pi;
    const double c = std::cos(beta), sn = std::sin(beta);
    NumberMoments m;
    m.mean = half_n + c * jz - sn * jx;
    m.second = quarter_n2 + c * njz - sn * njx + c * c * jz2 + sn * sn * jx2 - sn * c * anti;
    return m;
  }
};

// Mixed mean and second moment of the detected count versus theta.
class MomentCurve {
 public:
  static MomentCurve ideal(IdealTerms t, double n_bar) {
    MomentCurve c;
    c.ideal_ = true;
    c.terms_ = t;
    c.n_bar_ = n_bar;
    return c;
  }
  static MomentCurve spectral(TrigSeries m1, TrigSeries m2, double n_bar) {
    MomentCurve c;
    c.m1_ = std::move(m1);
    c.m2_ = std::move(m2);
    c.n_bar_ = n_bar;
    return c;
  }

  NumberMoments at(double theta) const {
    if (ideal_) return terms_.at(theta);
    const double beta = theta + 0.5 * std::numbers::pi;
    return {m1_(beta), m2_(beta)};
  }

  double n_bar() const { return n_bar_; }

  // Returns kUnusable where the mean has no slope.
  double dtheta2(double theta) const {
    const double d = (at(theta + kFdStep).mean - at(theta - kFdStep).mean) / (2.0 * kFdStep);
    if (std::abs(d) <= 1e-8 * std::max(1.0, n_bar_)) return kUnusable;
    return std::max(at(theta).variance(), 0.0) / (d * d);
  }

 private:
  bool ideal_ = false;
  IdealTerms terms_;
  TrigSeries m1_, m2_;
  double n_bar_ = 0.0;
};

SensitivityOptimum optimize_curve(const MomentCurve& curve) {
  const double pi = std::numbers::pi;
  double best = kUnusable;
  int best_i = -1;
  for (int i = 0; i < kThetaGrid; ++i) {
    const double theta = pi * (i + 0.5) / kThetaGrid;
    const double v = curve.dtheta2(theta);
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  if (best_i < 0) throw std::domain_error("optimize_theta: the mean count has no slope anywhere");
  const double lo = pi * std::max(best_i - 0.5, 0.5) / kThetaGrid;
  const double hi = pi * std::min(best_i + 1.5, kThetaGrid - 0.5) / kThetaGrid;
  auto [theta, value] = boost::math::tools::brent_find_minima(
      [&](double t) { return curve.dtheta2(t); }, lo, hi, kBrentBits);
  if (!(value < best)) {
    theta = pi * (best_i + 0.5) / kThetaGrid;
    value = best;
  }
  return {theta, value, 1.0 / (curve.n_bar() * value)};
}

std::vector<std::size_t> support(const DiagonalState& rho) {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < rho.size(); ++n) {
    if (rho[n] > 0.0) out.push_back(n);
  }
  return out;
}

using SectorTable = std::vector<std::unique_ptr<const SectorModel>>;

// Sector models for every N in `ns` (indexed by N), built on `jobs` workers.
SectorTable build_sectors(const std::vector<std::size_t>& ns, const Readout& readout, int jobs) {
  SectorTable table(ns.empty() ? 0 : ns.back() + 1);
  parallel_for(ns.size(), jobs, [&](std::size_t i) {
    table[ns[i]] = std::make_unique<const SectorModel>(ns[i], readout);
  });
  return table;
}

MomentCurve spectral_curve(const DiagonalState& rho, double s, const SectorTable& sectors) {
  TrigSeries m1, m2;
  for (std::size_t n : support(rho)) {
    const auto [a1, a2] = sectors[n]->moments(s);
    m1.add(a1, rho[n]);
    m2.add(a2, rho[n]);
  }
  return MomentCurve::spectral(std::move(m1), std::move(m2), rho.mean());
}

MomentCurve ideal_curve(const DiagonalState& rho, double s) {
  IdealTerms sum;
  for (std::size_t n : support(rho)) sum.add(IdealTerms::of(s, n), rho[n]);
  return MomentCurve::ideal(sum, rho.mean());
}

MomentCurve ensemble_curve(const SqueezedEnsemble& e, const DetectorMatrix* v) {
  e.validate();
  if (v == nullptr) return ideal_curve(e.rho, e.s);
  const std::vector<std::size_t> ns = support(e.rho);
  const SectorTable sectors = build_sectors(ns, make_readout(v, ns.back()), 1);
  return spectral_curve(e.rho, e.s, sectors);
}

}  // namespace

Eigen::MatrixXd jx_matrix(std::size_t n_total) {
  const auto size = static_cast<Eigen::Index>(n_total + 1);
  Eigen::MatrixXd jx = Eigen::MatrixXd::Zero(size, size);
  const double n = static_cast<double>(n_total);
  for (Eigen::Index m = 0; m + 1 < size; ++m) {
    const double off = 0.5 * std::sqrt(static_cast<double>(m + 1) * (n - static_cast<double>(m)));
    jx(m + 1, m) = off;
    jx(m, m + 1) = off;
  }
  return jx;
}

Eigen::VectorXd squeezed_envelope(double s, std::size_t n_total) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("squeezing parameter s must be > 0");
  check_sector(n_total);
  const auto size = static_cast<Eigen::Index>(n_total + 1);
  Eigen::VectorXd c(size);
  if (n_total == 0) {
    c(0) = 1.0;
    return c;
  }
  const double n = static_cast<double>(n_total);
  for (Eigen::Index m = 0; m < size; ++m) {
    const double mu = static_cast<double>(m) - 0.5 * n;
    c(m) = std::exp(-mu * mu / (n * s));
  }
  return c / c.norm();
}

SpinSector::SpinSector(std::size_t n_total) : n_total_(n_total) {
  check_sector(n_total);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jx_matrix(n_total));
  if (solver.info() != Eigen::Success) throw std::runtime_error("SpinSector: J_x diagonalization failed");
  lambda_ = solver.eigenvalues();
  u_ = solver.eigenvectors();
}

Eigen::VectorXcd SpinSector::spectral_weights(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != n_total_ + 1) {
    throw std::invalid_argument("SpinSector: vector size does not match N + 1");
  }
  Eigen::VectorXcd r_dag_x(x.size());
  for (Eigen::Index m = 0; m < x.size(); ++m) {
    r_dag_x(m) = std::conj(r_phase(static_cast<std::size_t>(m), n_total_)) * x(m);
  }
  return u_.transpose().cast<cd>() * r_dag_x;
}

Eigen::VectorXd SpinSector::rotate(const Eigen::VectorXd& x, double beta) const {
  Eigen::VectorXcd w = spectral_weights(x);
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) *= std::polar(1.0, -beta * lambda_(k));
  const Eigen::VectorXcd z = u_.cast<cd>() * w;
  Eigen::VectorXd out(z.size());
  for (Eigen::Index m = 0; m < z.size(); ++m) {
    out(m) = (r_phase(static_cast<std::size_t>(m), n_total_) * z(m)).real();
  }
  return out;
}

Eigen::MatrixXd jy_rotation(std::size_t n_total, double beta) {
  const SpinSector sector(n_total);
  const auto size = static_cast<Eigen::Index>(n_total + 1);
  Eigen::MatrixXd d(size, size);
  for (Eigen::Index k = 0; k < size; ++k) d.col(k) = sector.rotate(Eigen::VectorXd::Unit(size, k), beta);
  return d;
}

Eigen::VectorXd build_squeezed_state(double s, std::size_t n_total) {
  if (n_total < 1) throw std::invalid_argument("build_squeezed_state: need N >= 1");
  return SpinSector(n_total).rotate(squeezed_envelope(s, n_total), 0.5 * std::numbers::pi);
}

void SqueezedEnsemble::validate() const {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("SqueezedEnsemble: s must be > 0");
  if (rho.size() == 0) throw std::invalid_argument("SqueezedEnsemble: empty rho");
  check_sector(rho.size() - 1);
}

SqueezedEnsemble SqueezedEnsemble::gaussian(double s, double n_mean, double dn, double width_sigmas) {
  SqueezedEnsemble e{s, DiagonalState::gaussian(n_mean, dn, width_sigmas)};
  e.validate();
  return e;
}

ProbVector rotated_number_distribution(const SqueezedEnsemble& ensemble, double theta) {
  ensemble.validate();
  std::vector<double> p(ensemble.rho.size(), 0.0);
  for (std::size_t n : support(ensemble.rho)) {
    const Eigen::VectorXd psi =
        SpinSector(n).rotate(squeezed_envelope(ensemble.s, n), theta + 0.5 * std::numbers::pi);
    for (Eigen::Index m = 0; m < psi.size(); ++m) {
      p[static_cast<std::size_t>(m)] += ensemble.rho[n] * psi(m) * psi(m);
    }
  }
  return ProbVector::from_weights(std::move(p));
}

NumberMoments ideal_number_moments(double s, std::size_t n_total, double theta) {
  return IdealTerms::of(s, n_total).at(theta);
}

double phase_sensitivity(const SqueezedEnsemble& ensemble, double theta, const DetectorMatrix* v) {
  const double value = ensemble_curve(ensemble, v).dtheta2(theta);
  if (value == kUnusable) {
    throw std::domain_error("phase_sensitivity: d<n>/dtheta vanishes at theta = " + std::to_string(theta));
  }
  return value;
}

SensitivityOptimum optimize_theta(const SqueezedEnsemble& ensemble, const DetectorMatrix* v) {
  return optimize_curve(ensemble_curve(ensemble, v));
}

std::vector<double> default_s_axis() {
  std::vector<double> s(60);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = std::pow(10.0, -2.0 + 2.0 * static_cast<double>(i) / static_cast<double>(s.size() - 1));
  }
  return s;
}

GainMap gain_map(double n_mean, const DetectorMatrix* v, const std::vector<double>& s_axis,
                 const std::vector<double>& dn_axis, int jobs) {
  if (s_axis.empty() || dn_axis.empty()) throw std::invalid_argument("gain_map: empty axis");
  std::vector<DiagonalState> rhos;
  std::vector<std::size_t> ns;
  for (double dn : dn_axis) {
    rhos.push_back(DiagonalState::gaussian(n_mean, dn));
    check_sector(rhos.back().size() - 1);
    for (std::size_t n : support(rhos.back())) ns.push_back(n);
  }
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  const SectorTable sectors = v ? build_sectors(ns, make_readout(v, ns.back()), jobs) : SectorTable{};

  GainMap map{n_mean, s_axis, dn_axis,
              Eigen::MatrixXd(static_cast<Eigen::Index>(s_axis.size()),
                              static_cast<Eigen::Index>(dn_axis.size())),
              Eigen::MatrixXd(static_cast<Eigen::Index>(s_axis.size()),
                              static_cast<Eigen::Index>(dn_axis.size()))};
  parallel_for(s_axis.size(), jobs, [&](std::size_t i) {
    const double s = s_axis[i];
    if (!(s > 0.0)) throw std::invalid_argument("gain_map: s must be > 0");
    for (std::size_t k = 0; k < dn_axis.size(); ++k) {
      const MomentCurve curve = v ? spectral_curve(rhos[k], s, sectors) : ideal_curve(rhos[k], s);
      const SensitivityOptimum opt = optimize_curve(curve);
      map.gain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = opt.gain;
      map.theta_opt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = opt.theta;
    }
  });
  return map;
}

std::vector<ScalingPoint> gain_scaling(const DetectorMatrix* v, const std::vector<double>& n_axis,
                                       const std::vector<double>& s_axis, int jobs) {
  if (s_axis.empty()) throw std::invalid_argument("gain_scaling: empty s axis");
  std::vector<ScalingPoint> out;
  for (double n_mean : n_axis) {
    if (!(n_mean > 0.0)) throw std::invalid_argument("gain_scaling: n_mean must be > 0");
    const DiagonalState rho = DiagonalState::gaussian(n_mean, std::sqrt(n_mean), kScalingWidthSigmas);
    check_sector(rho.size() - 1);
    const std::vector<std::size_t> ns = support(rho);
    const SectorTable sectors = v ? build_sectors(ns, make_readout(v, ns.back()), jobs) : SectorTable{};
    auto evaluate = [&](double s) {
      return optimize_curve(v ? spectral_curve(rho, s, sectors) : ideal_curve(rho, s));
    };

    std::vector<SensitivityOptimum> grid(s_axis.size());
    parallel_for(s_axis.size(), jobs, [&](std::size_t i) { grid[i] = evaluate(s_axis[i]); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (grid[i].gain > grid[best].gain) best = i;
    }
    ScalingPoint point{n_mean, grid[best].gain, s_axis[best], grid[best].theta};
    if (s_axis.size() >= 3) {
      const double lo = std::log(s_axis[best == 0 ? 0 : best - 1]);
      const double hi = std::log(s_axis[std::min(best + 1, s_axis.size() - 1)]);
      const auto [log_s, neg_gain] = boost::math::tools::brent_find_minima(
          [&](double ls) { return -evaluate(std::exp(ls)).gain; }, std::min(lo, hi),
          std::max(lo, hi), kBrentBits);
      if (-neg_gain > point.gain) {
        const SensitivityOptimum refined = evaluate(std::exp(log_s));
        point = {n_mean, refined.gain, std::exp(log_s), refined.theta};
      }
    }
    out.push_back(point);
  }
  return out;
}

double gain_db(double gain) { return 10.0 * std::log10(gain); }

double power_law_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("power_law_exponent: need >= 2 points");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("power_law_exponent: values must be > 0");
    a(static_cast<Eigen::Index>(i), 0) = std::log(x[i]);
    a(static_cast<Eigen::Index>(i), 1) = 1.0;
    b(static_cast<Eigen::Index>(i)) = std::log(y[i]);
  }
  return a.colPivHouseholderQr().solve(b)(0);
}

}  // namespace qdt
