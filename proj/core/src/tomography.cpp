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

#include "qdt/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <unsupported/Eigen/NonLinearOptimization>

#include "qdt/parallel.hpp"
#include "qdt/simulator.hpp"

namespace qdt {
namespace {

constexpr int kMaxHalvings = 30;

Eigen::VectorXd to_eigen(const ProbVector& p, std::size_t size) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < std::min(size, p.size()); ++i) out(static_cast<Eigen::Index>(i)) = p[i];
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void project_columns(Eigen::MatrixXd& v) {
  const auto rows = static_cast<std::size_t>(v.rows());
  for (Eigen::Index m = 0; m < v.cols(); ++m) {
    const std::vector<double> col = simplex_project(std::span<const double>(v.col(m).data(), rows));
    std::copy(col.begin(), col.end(), v.col(m).data());
  }
}

void project_vector(Eigen::VectorXd& x) {
  const std::vector<double> p =
      simplex_project(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  std::copy(p.begin(), p.end(), x.data());
}

// sin^2(pi f t) with f in kHz and t in microseconds.
double fit_phase(double f_khz, double t_us) { return std::numbers::pi * f_khz * t_us * 1e-3; }

struct MeanFitFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const std::vector<double>& t;
  const std::vector<double>& y;
  const std::vector<double>& w;  // 1 / standard error of each mean

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(t.size()); }

  // x = (amplitude, f_khz, offset)
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double s = std::sin(fit_phase(x(1), t[j]));
      fvec(static_cast<Eigen::Index>(j)) = w[j] * (x(0) * s * s + x(2) - y[j]);
    }
    return 0;
  }
  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& fjac) const {
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double u = fit_phase(x(1), t[j]);
      const auto r = static_cast<Eigen::Index>(j);
      fjac(r, 0) = w[j] * std::sin(u) * std::sin(u);
      fjac(r, 1) = w[j] * x(0) * std::sin(2.0 * u) * std::numbers::pi * t[j] * 1e-3;
      fjac(r, 2) = w[j];
    }
    return 0;
  }
};

double rms(const Eigen::VectorXd& r) {
  return r.size() == 0 ? 0.0 : std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

// Weighted amplitude/offset least squares at a fixed frequency; returns the
// weighted residual norm.
double linear_mean_fit(const std::vector<double>& t, const std::vector<double>& y,
                       const std::vector<double>& w, double f_khz, double& amplitude,
                       double& offset) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = std::sin(fit_phase(f_khz, t[static_cast<std::size_t>(j)]));
    const double wj = w[static_cast<std::size_t>(j)];
    a(j, 0) = wj * s * s;
    a(j, 1) = wj;
    b(j) = wj * y[static_cast<std::size_t>(j)];
  }
  const Eigen::Vector2d x = a.colPivHouseholderQr().solve(b);
  amplitude = x(0);
  offset = x(1);
  return (a * x - b).norm();
}

MomentFits fit_moments(const HistogramDataset& data) {
  const std::vector<double>& t = data.times_us();
  std::set<double> distinct(t.begin(), t.end());
  if (distinct.size() < 3) {
    throw std::invalid_argument("init_from_fits: need at least 3 distinct times");
  }
  const double t_max = *distinct.rbegin();
  if (!(t_max > 0.0)) throw std::invalid_argument("init_from_fits: all times are zero");

  // Each mean is weighted by its standard error; the floor keeps noiseless or
  // single-valued histograms finite.
  std::vector<double> first, second, weight;
  for (std::size_t j = 0; j < t.size(); ++j) {
    const ProbVector& h = data.histograms()[j];
    const double m = h.mean();
    first.push_back(m);
    second.push_back(h.variance() + m * m);
    const double se2 = h.variance() / static_cast<double>(data.shot_counts()[j]);
    weight.push_back(1.0 / std::sqrt(se2 + 1e-6));
  }

  // Coarse scan over the phase reached at t_max, then Levenberg-Marquardt.
  double best_res = std::numeric_limits<double>::infinity();
  double best_f = 0.0;
  constexpr int kScan = 4000;
  for (int i = 0; i < kScan; ++i) {
    const double u_max = 0.02 * std::pow(1000.0, static_cast<double>(i) / (kScan - 1));
    const double f = u_max / (std::numbers::pi * t_max * 1e-3);
    double a = 0.0, c = 0.0;
    const double res = linear_mean_fit(t, first, weight, f, a, c);
    if (a > 0.0 && res < best_res) {
      best_res = res;
      best_f = f;
    }
  }
  if (!std::isfinite(best_res)) {
    throw FitError("init_from_fits: no positive-amplitude sinusoid fits the mean counts", 0.0);
  }
  Eigen::VectorXd x(3);
  linear_mean_fit(t, first, weight, best_f, x(0), x(2));
  x(1) = best_f;
  MeanFitFunctor functor{t, first, weight};
  Eigen::LevenbergMarquardt<MeanFitFunctor> lm(functor);
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  lm.parameters.maxfev = 2000;
  lm.minimize(x);
  Eigen::VectorXd resid(static_cast<Eigen::Index>(t.size()));
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double s = std::sin(fit_phase(x(1), t[j]));
    resid(static_cast<Eigen::Index>(j)) = x(0) * s * s + x(2) - first[j];
  }

  MomentFits fits;
  fits.mean_n = x(0);
  fits.frequency_khz = std::abs(x(1));
  fits.offset = x(2);
  fits.mean_rms_residual = rms(resid);
  if (!(fits.mean_n > 0.0) || !std::isfinite(fits.frequency_khz) || fits.frequency_khz == 0.0) {
    throw FitError("init_from_fits: mean-count fit did not converge", fits.mean_rms_residual);
  }

  // <n^2>(t) = sum_k b_k sin^k(pi f t); linear once f is fixed.
  const std::size_t terms = std::min<std::size_t>(5, distinct.size());
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd a(n, static_cast<Eigen::Index>(terms));
  Eigen::VectorXd b(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = std::sin(fit_phase(fits.frequency_khz, t[static_cast<std::size_t>(j)]));
    double pw = 1.0;
    for (std::size_t k = 0; k < terms; ++k) {
      a(j, static_cast<Eigen::Index>(k)) = pw;
      pw *= s;
    }
    b(j) = second[static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  fits.second_rms_residual = rms(a * coef - b);
  for (std::size_t k = 0; k < terms; ++k) fits.b[k] = coef(static_cast<Eigen::Index>(k));

  // For a binomial mixture the sin^4 coefficient is <N^2> - <N>.
  const double var_n = terms == 5 ? fits.b[4] + fits.mean_n - fits.mean_n * fits.mean_n : -1.0;
  if (std::isfinite(var_n) && var_n > 0.0) {
    fits.delta_n = std::sqrt(var_n);
  } else {
    fits.delta_n = std::sqrt(fits.mean_n);
    fits.delta_n_fallback = true;
  }
  return fits;
}

Eigen::MatrixXd random_stochastic(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd v(d, d);
  for (Eigen::Index m = 0; m < d; ++m) {
    for (Eigen::Index n = 0; n < d; ++n) v(n, m) = expo(rng);
    v.col(m) /= v.col(m).sum();
  }
  return v;
}

}  // namespace

const char* to_string(CostKind kind) {
  return kind == CostKind::kHellinger ? "hellinger" : "kl";
}

CostKind cost_kind_from_string(const std::string& name) {
  if (name == "hellinger") return CostKind::kHellinger;
  if (name == "kl") return CostKind::kKullbackLeibler;
  throw std::invalid_argument("unknown cost kind: " + name);
}

void TomographyConfig::validate() const {
  if (!(cost_cutoff > 0.0)) throw std::invalid_argument("TomographyConfig: cost_cutoff must be > 0");
  if (max_outer_iters < 1 || inner_iters_v < 1 || inner_iters_rho < 1 || inner_iters_omega < 1) {
    throw std::invalid_argument("TomographyConfig: iteration counts must be >= 1");
  }
  if (!(step_v > 0.0) || !(step_rho > 0.0) || !(step_omega > 0.0)) {
    throw std::invalid_argument("TomographyConfig: step sizes must be > 0");
  }
  if (bootstrap_replicas < 0) throw std::invalid_argument("TomographyConfig: negative replicas");
}

InitialGuess init_from_fits(const HistogramDataset& data, std::uint64_t rng_seed,
                            std::optional<std::size_t> n_dim) {
  const MomentFits fits = fit_moments(data);
  const std::size_t dim = n_dim.value_or(data.max_observed() + 1);
  const double width = std::max(fits.delta_n, std::sqrt(fits.mean_n));
  const auto rho_top = static_cast<std::size_t>(std::ceil(fits.mean_n + 6.0 * width));
  const std::size_t rho_hi = std::max(dim - 1, rho_top);
  InitialGuess g{
      DiagonalState::gaussian(fits.mean_n, fits.delta_n, 6.0, rho_hi),
      RabiParams(2.0 * std::numbers::pi * fits.frequency_khz * 1e3),
      DetectorMatrix(random_stochastic(dim, rng_seed)),
      fits,
  };
  return g;
}

ProbVector predict(const DetectorMatrix& v, const DiagonalState& rho, double omega, double t_us) {
  return v.apply(ideal_distribution_theta(rho, omega * t_us * 1e-6));
}

double cost(const DetectorMatrix& v, const DiagonalState& rho, double omega,
            const HistogramDataset& data, CostKind kind) {
  double total = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const ProbVector model = predict(v, rho, omega, data.times_us()[j]);
    const ProbVector& obs = data.histograms()[j];
    if (kind == CostKind::kHellinger) {
      total += hellinger_sq(model, obs);
    } else {
      for (std::size_t n = 0; n < obs.size(); ++n) {
        if (obs[n] > 0.0) total += obs[n] * std::log(obs[n] / std::max(model[n], kProbabilityFloor));
      }
    }
  }
  return total;
}

CostModel::CostModel(const HistogramDataset& data, std::size_t n_dim, std::size_t rho_dim,
                     CostKind kind)
    : n_dim_(n_dim), rho_dim_(rho_dim), kind_(kind), times_(data.times_us()) {
  if (n_dim < data.max_observed() + 1) {
    throw std::invalid_argument("CostModel: n_dim smaller than the observed support");
  }
  if (rho_dim == 0) throw std::invalid_argument("CostModel: empty rho");
  for (const ProbVector& h : data.histograms()) p_exp_.push_back(to_eigen(h, n_dim));
}

CostModel::Kernels CostModel::kernels(double omega) const {
  Kernels k;
  k.omega = omega;
  const auto nd = static_cast<Eigen::Index>(n_dim_);
  const auto rd = static_cast<Eigen::Index>(rho_dim_);
  for (double t : times_) {
    const double theta = omega * t * 1e-6;
    const double p = transfer_prob_theta(theta);
    const double dp_domega = 0.5 * std::sin(theta) * t * 1e-6;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nd, rd);
    Eigen::MatrixXd db = Eigen::MatrixXd::Zero(nd, rd);
    for (Eigen::Index big_n = 0; big_n < rd; ++big_n) {
      const auto nn = static_cast<std::size_t>(big_n);
      const std::vector<double> pmf = binomial_pmf(nn, p);
      const std::vector<double> dpmf = binomial_pmf_dp(nn, p);
      for (std::size_t m = 0; m <= nn; ++m) {
        const Eigen::Index row = std::min(static_cast<Eigen::Index>(m), nd - 1);
        b(row, big_n) += pmf[m];
        db(row, big_n) += dpmf[m] * dp_domega;
      }
    }
    k.b.push_back(std::move(b));
    k.db_domega.push_back(std::move(db));
  }
  return k;
}

double CostModel::divergence(const Eigen::VectorXd& model, const Eigen::VectorXd& data) const {
  double d = 0.0;
  for (Eigen::Index n = 0; n < model.size(); ++n) {
    const double pm = std::max(model(n), kProbabilityFloor);
    if (kind_ == CostKind::kHellinger) {
      const double diff = std::sqrt(pm) - std::sqrt(data(n));
      d += diff * diff;
    } else if (data(n) > 0.0) {
      d += data(n) * std::log(data(n) / pm);
    }
  }
  return d;
}

Eigen::VectorXd CostModel::divergence_grad(const Eigen::VectorXd& model,
                                           const Eigen::VectorXd& data) const {
  Eigen::VectorXd g(model.size());
  for (Eigen::Index n = 0; n < model.size(); ++n) {
    const double pm = std::max(model(n), kProbabilityFloor);
    g(n) = kind_ == CostKind::kHellinger ? 1.0 - std::sqrt(data(n) / pm) : -data(n) / pm;
  }
  return g;
}

double CostModel::value(const Eigen::MatrixXd& v, const Eigen::VectorXd& rho,
                        const Kernels& k) const {
  double total = 0.0;
  for (std::size_t j = 0; j < times_.size(); ++j) {
    total += divergence(v * (k.b[j] * rho), p_exp_[j]);
  }
  return total;
}

CostModel::Gradient CostModel::gradient(const Eigen::MatrixXd& v, const Eigen::VectorXd& rho,
                                        const Kernels& k) const {
  Gradient g;
  g.d_v = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  g.d_rho = Eigen::VectorXd::Zero(rho.size());
  for (std::size_t j = 0; j < times_.size(); ++j) {
    const Eigen::VectorXd ideal = k.b[j] * rho;
    const Eigen::VectorXd model = v * ideal;
    g.value += divergence(model, p_exp_[j]);
    const Eigen::VectorXd dmodel = divergence_grad(model, p_exp_[j]);
    g.d_v.noalias() += dmodel * ideal.transpose();
    const Eigen::VectorXd dideal = v.transpose() * dmodel;
    g.d_rho.noalias() += k.b[j].transpose() * dideal;
    g.d_omega += dideal.dot(k.db_domega[j] * rho);
  }
  return g;
}

TomographyResult reconstruct(const HistogramDataset& data, const TomographyConfig& config,
                             const StepObserver& observer) {
  return reconstruct_with_dim(data, config, data.max_observed() + 1, observer);
}

TomographyResult reconstruct_with_dim(const HistogramDataset& data, const TomographyConfig& config,
                                      std::size_t n_dim, const StepObserver& observer) {
  config.validate();
  return reconstruct_from(data, config, init_from_fits(data, config.rng_seed, n_dim), observer);
}

TomographyResult reconstruct_from(const HistogramDataset& data, const TomographyConfig& config,
                                  const InitialGuess& init, const StepObserver& observer) {
  config.validate();
  const std::size_t n_dim = init.v.dim();
  const std::size_t rho_dim = init.rho.size();
  const CostModel model(data, n_dim, rho_dim, config.cost_kind);

  Eigen::MatrixXd v = init.v.matrix();
  Eigen::VectorXd rho = to_eigen(init.rho.weights(), rho_dim);
  double log_omega = std::log(init.rabi.omega_rad_per_s);
  CostModel::Kernels kern = model.kernels(std::exp(log_omega));
  double c = model.value(v, rho, kern);

  TomographyResult result;
  result.fits = init.fits;
  result.initial_cost = c;

  auto notify = [&](Block block) {
    if (observer) observer(block, v, rho, std::exp(log_omega), c);
  };

  // One projected step with backtracking from the configured step size.
  // `trial(step)` returns the candidate cost and `commit()` adopts the last
  // candidate. Returns false when no halving produced a decrease.
  auto descend = [&](double step, auto&& trial, auto&& commit) {
    double eta = step;
    for (int h = 0; h <= kMaxHalvings; ++h, eta *= 0.5) {
      const double candidate = trial(eta);
      if (candidate < c) {
        commit();
        c = candidate;
        return true;
      }
    }
    return false;
  };

  for (int outer = 0; outer < config.max_outer_iters && c > config.cost_cutoff; ++outer) {
    bool moved = false;

    for (int it = 0; it < config.inner_iters_v && c > config.cost_cutoff; ++it) {
      const CostModel::Gradient g = model.gradient(v, rho, kern);
      Eigen::MatrixXd cand;
      const bool ok = descend(
          config.step_v,
          [&](double eta) {
            cand = v - eta * g.d_v;
            project_columns(cand);
            return model.value(cand, rho, kern);
          },
          [&] { v.swap(cand); });
      if (!ok) break;
      moved = true;
      notify(Block::kV);
    }

    for (int it = 0; it < config.inner_iters_rho && c > config.cost_cutoff; ++it) {
      const CostModel::Gradient g = model.gradient(v, rho, kern);
      Eigen::VectorXd cand;
      const bool ok = descend(
          config.step_rho,
          [&](double eta) {
            cand = rho - eta * g.d_rho;
            project_vector(cand);
            return model.value(v, cand, kern);
          },
          [&] { rho.swap(cand); });
      if (!ok) break;
      moved = true;
      notify(Block::kRho);
    }

    for (int it = 0; it < config.inner_iters_omega && c > config.cost_cutoff; ++it) {
      const CostModel::Gradient g = model.gradient(v, rho, kern);
      const double d_log = g.d_omega * std::exp(log_omega);
      double cand_log = log_omega;
      CostModel::Kernels cand_kern;
      const bool ok = descend(
          config.step_omega,
          [&](double eta) {
            cand_log = log_omega - eta * d_log;
            cand_kern = model.kernels(std::exp(cand_log));
            return model.value(v, rho, cand_kern);
          },
          [&] {
            log_omega = cand_log;
            kern = std::move(cand_kern);
          });
      if (!ok) break;
      moved = true;
      notify(Block::kOmega);
    }

    result.cost_trace.push_back(c);
    if (!moved) break;
  }

  result.v = DetectorMatrix(v);
  result.rho = DiagonalState(to_std(rho));
  result.omega_rad_per_s = std::exp(log_omega);
  result.final_cost = c;
  result.converged = c <= config.cost_cutoff;
  return result;
}

SummaryStat summarize(const std::vector<double>& xs) {
  SummaryStat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

HistogramDataset resample_dataset(const TomographyResult& result, const HistogramDataset& data,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::uint64_t>> counts;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const ProbVector p = predict(result.v, result.rho, result.omega_rad_per_s, data.times_us()[j]);
    counts.push_back(sample_multinomial(p, data.shot_counts()[j], rng));
  }
  return HistogramDataset::from_counts(data.times_us(), std::move(counts));
}

BootstrapEnsemble bootstrap(const TomographyResult& result, const HistogramDataset& data,
                            const TomographyConfig& config) {
  config.validate();
  const auto replicas = static_cast<std::size_t>(config.bootstrap_replicas);
  BootstrapEnsemble ens;
  ens.replicas.resize(replicas);
  const std::size_t n_dim = result.v.dim();
  parallel_for(replicas, config.jobs, [&](std::size_t k) {
    TomographyConfig cfg = config;
    cfg.rng_seed = config.rng_seed + k;
    const HistogramDataset replica = resample_dataset(result, data, cfg.rng_seed);
    ens.replicas[k] = reconstruct_with_dim(replica, cfg, n_dim);
  });

  std::vector<double> omegas, costs;
  const auto d = static_cast<Eigen::Index>(n_dim);
  Eigen::Index rho_dim = 0;
  for (const auto& r : ens.replicas) rho_dim = std::max<Eigen::Index>(rho_dim, r.rho.size());
  ens.v_mean = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd v_sq = Eigen::MatrixXd::Zero(d, d);
  ens.rho_mean = Eigen::VectorXd::Zero(rho_dim);
  Eigen::VectorXd rho_sq = Eigen::VectorXd::Zero(rho_dim);
  for (const auto& r : ens.replicas) {
    omegas.push_back(r.omega_rad_per_s);
    costs.push_back(r.final_cost);
    if (!r.converged) ++ens.non_converged;
    ens.v_mean += r.v.matrix();
    v_sq += r.v.matrix().cwiseProduct(r.v.matrix());
    const Eigen::VectorXd rv = to_eigen(r.rho.weights(), static_cast<std::size_t>(rho_dim));
    ens.rho_mean += rv;
    rho_sq += rv.cwiseProduct(rv);
  }
  ens.omega = summarize(omegas);
  ens.final_cost = summarize(costs);
  if (replicas > 0) {
    const double k = static_cast<double>(replicas);
    ens.v_mean /= k;
    ens.rho_mean /= k;
    const double bessel = replicas > 1 ? k / (k - 1.0) : 0.0;
    ens.v_std = ((v_sq / k - ens.v_mean.cwiseProduct(ens.v_mean)) * bessel).cwiseMax(0.0).cwiseSqrt();
    ens.rho_std =
        ((rho_sq / k - ens.rho_mean.cwiseProduct(ens.rho_mean)) * bessel).cwiseMax(0.0).cwiseSqrt();
  }
  return ens;
}

LearningTestResult learning_test(const HistogramDataset& data, std::size_t j,
                                 const TomographyConfig& config) {
  if (data.size() < 3) throw std::invalid_argument("learning_test: need at least 3 times");
  if (j >= data.size()) throw std::out_of_range("learning_test: time index out of range");
  LearningTestResult out;
  out.held_out = j;
  out.time_us = data.times_us()[j];
  out.trained = reconstruct(data.without(j), config);
  out.predicted =
      predict(out.trained.v, out.trained.rho, out.trained.omega_rad_per_s, out.time_us);
  out.fidelity = fidelity(out.predicted, data.histograms()[j]);
  return out;
}

std::vector<LearningTestResult> learning_tests(const HistogramDataset& data,
                                               const std::vector<std::size_t>& indices,
                                               const TomographyConfig& config) {
  std::vector<LearningTestResult> out(indices.size());
  parallel_for(indices.size(), config.jobs,
               [&](std::size_t i) { out[i] = learning_test(data, indices[i], config); });
  return out;
}

}  // namespace qdt
