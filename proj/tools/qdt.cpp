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

// qdt: simulate -> reconstruct -> analyze -> metrology over files.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 reconstruction did not reach
// the cost cutoff.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qdt/analysis.hpp"
#include "qdt/dataset_io.hpp"
#include "qdt/metrology.hpp"
#include "qdt/result_io.hpp"
#include "qdt/simulator.hpp"
#include "qdt/tomography.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --seed wins, then QDT_SEED, then 1.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("QDT_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("QDT_SEED is not an unsigned integer: ") + env);
  }
  return 1;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad value in ") + what + ": '" + item + "'");
    }
  }
  return out;
}

std::vector<std::size_t> to_indices(const std::vector<double>& xs, std::size_t limit, const char* what) {
  std::vector<std::size_t> out;
  for (double x : xs) {
    if (x < 0 || x != std::floor(x) || x >= static_cast<double>(limit)) {
      throw UsageError(std::string(what) + ": index out of range");
    }
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One manifest per directory; each command appends a run record.
void append_manifest(const fs::path& dir, const std::string& command, const json& config,
                     const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                     std::uint64_t seed, double seconds) {
  const fs::path path = dir / "manifest.json";
  json doc = {{"runs", json::array()}};
  if (fs::exists(path)) doc = json::parse(qdt::read_text_file(path));
  doc["runs"].push_back({{"command", command},
                         {"config", config},
                         {"inputs", inputs},
                         {"outputs", outputs},
                         {"seed", seed},
                         {"tool_version", kVersion},
                         {"started_utc", utc_now()},
                         {"wall_seconds", seconds}});
  qdt::write_text_file(path, doc.dump(2) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Rounds through the CSV precision so JSON and CSV outputs agree.
double r12(double x) { return std::stod(qdt::format_csv(x)); }

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string times = "0,4,8,12,16,20,24,28";
  std::int64_t shots = 1100;
  double omega_khz = 8.2;
  double n_mean = 35.4;
  double n_std = 6.4;
  double sigma = 0.4;
  double dark = 0.27;
  double loss = 0.0;
  std::size_t n_max = 59;
  std::string kernel = "point";
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_simulate(const SimulateOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  if (o.shots < 1) throw UsageError("--shots must be >= 1");
  if (!(o.omega_khz > 0)) throw UsageError("--omega-khz must be > 0");
  if (o.n_mean < 0 || o.n_std < 0) throw UsageError("--n-mean and --n-std must be >= 0");
  if (o.format != "csv" && o.format != "json" && o.format != "both") {
    throw UsageError("--format must be csv, json or both");
  }
  if (o.kernel != "point" && o.kernel != "bin") throw UsageError("--kernel must be point or bin");
  const std::uint64_t seed = resolve_seed(o.seed);

  qdt::SyntheticDetectorSpec spec;
  spec.sigma = o.sigma;
  spec.dark = qdt::DarkCountModel(o.dark);
  spec.loss = o.loss;
  spec.n_max = o.n_max;
  spec.kernel = o.kernel == "bin" ? qdt::BlurKernel::kBinIntegrated : qdt::BlurKernel::kPointSampled;
  qdt::ExperimentPlan plan;
  plan.times_us = parse_list(o.times, "--times");
  plan.shots_per_time = static_cast<std::uint64_t>(o.shots);
  plan.rabi = qdt::RabiParams(qdt::omega_from_cyclic_khz(o.omega_khz));
  plan.state = qdt::DiagonalState::gaussian(o.n_mean, o.n_std);
  plan.rng_seed = seed;

  const qdt::DetectorMatrix v = qdt::build_detector(spec);
  const qdt::HistogramDataset data = qdt::sample_dataset(plan, v);

  const fs::path dir(o.out);
  ensure_dir(dir);
  std::vector<std::string> outputs;
  if (o.format != "json") {
    qdt::write_dataset(dir / "dataset.csv", data);
    outputs.push_back("dataset.csv");
  }
  if (o.format != "csv") {
    qdt::write_dataset(dir / "dataset.json", data);
    outputs.push_back("dataset.json");
  }
  qdt::write_detector(dir / "v_true.csv", v);
  qdt::write_state(dir / "rho_true.csv", plan.state);
  outputs.insert(outputs.end(), {"v_true.csv", "rho_true.csv"});
  const json config = {{"times_us", plan.times_us}, {"shots", o.shots},     {"omega_khz", o.omega_khz},
                       {"n_mean", o.n_mean},        {"n_std", o.n_std},     {"sigma", o.sigma},
                       {"dark", o.dark},            {"loss", o.loss},       {"n_max", o.n_max},
                       {"kernel", o.kernel}};
  append_manifest(dir, "simulate", config, {}, outputs, seed, seconds_since(t0));
  std::cout << "wrote " << data.size() << " histograms to " << dir.string() << "\n";
  return kExitOk;
}

// ------------------------------------------------------------- reconstruct

struct EngineOpts {
  double cutoff = 0.01;
  int max_outer = 3000;
  int inner_v = 50, inner_rho = 20, inner_omega = 5;
  double step_v = 0.1, step_rho = 0.01, step_omega = 1e-3;
  std::string cost = "hellinger";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::size_t n_max = 0;  // 0: max observed

  qdt::TomographyConfig config(std::uint64_t seed_value) const {
    qdt::TomographyConfig c;
    c.cost_cutoff = cutoff;
    c.max_outer_iters = max_outer;
    c.inner_iters_v = inner_v;
    c.inner_iters_rho = inner_rho;
    c.inner_iters_omega = inner_omega;
    c.step_v = step_v;
    c.step_rho = step_rho;
    c.step_omega = step_omega;
    c.rng_seed = seed_value;
    c.jobs = jobs;
    try {
      c.cost_kind = qdt::cost_kind_from_string(cost);
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

json config_json(const qdt::TomographyConfig& c) {
  return {{"cost_cutoff", c.cost_cutoff},     {"max_outer_iters", c.max_outer_iters},
          {"inner_iters_v", c.inner_iters_v}, {"inner_iters_rho", c.inner_iters_rho},
          {"inner_iters_omega", c.inner_iters_omega},
          {"step_v", c.step_v},               {"step_rho", c.step_rho},
          {"step_omega", c.step_omega},       {"rng_seed", c.rng_seed},
          {"bootstrap_replicas", c.bootstrap_replicas},
          {"cost_kind", qdt::to_string(c.cost_kind)}};
}

qdt::HistogramDataset load_dataset(const std::string& path) {
  if (path.empty()) throw UsageError("--in is required");
  if (!fs::exists(path)) throw UsageError("dataset not found: " + path);
  return qdt::ingest(path);
}

json learning_json(const std::vector<qdt::LearningTestResult>& tests) {
  json arr = json::array();
  for (const auto& t : tests) {
    arr.push_back({{"held_out", t.held_out},
                   {"time_us", t.time_us},
                   {"fidelity", r12(t.fidelity)},
                   {"trained_cost", r12(t.trained.final_cost)},
                   {"trained_converged", t.trained.converged}});
  }
  return arr;
}

void write_learning_csv(const fs::path& path, const std::vector<qdt::LearningTestResult>& tests) {
  std::ostringstream out;
  out << "held_out,time_us,fidelity\n";
  for (const auto& t : tests) {
    out << t.held_out << ',' << qdt::format_csv(t.time_us) << ',' << qdt::format_csv(t.fidelity) << '\n';
  }
  qdt::write_text_file(path, out.str());
}

int cmd_reconstruct(const std::string& in, const std::string& out, const EngineOpts& eo,
                    int bootstrap_replicas, const std::string& learn) {
  const auto t0 = std::chrono::steady_clock::now();
  const qdt::HistogramDataset data = load_dataset(in);
  const std::uint64_t seed = resolve_seed(eo.seed);
  qdt::TomographyConfig config = eo.config(seed);
  if (bootstrap_replicas < 0) throw UsageError("--bootstrap must be >= 0");
  if (bootstrap_replicas > 0) config.bootstrap_replicas = bootstrap_replicas;
  std::vector<std::size_t> learn_idx;
  if (!learn.empty()) {
    if (learn == "all") {
      for (std::size_t j = 0; j < data.size(); ++j) learn_idx.push_back(j);
    } else {
      learn_idx = to_indices(parse_list(learn, "--learn-test"), data.size(), "--learn-test");
    }
  }
  const std::size_t n_dim = std::max(data.max_observed() + 1, eo.n_max + 1);
  const qdt::TomographyResult result = qdt::reconstruct_with_dim(data, config, n_dim);

  json report = {{"omega_r_rad_per_s", r12(result.omega_rad_per_s)},
                 {"omega_khz", r12(qdt::cyclic_khz_from_omega(result.omega_rad_per_s))},
                 {"final_cost", r12(result.final_cost)},
                 {"initial_cost", r12(result.initial_cost)},
                 {"converged", result.converged},
                 {"outer_iterations", result.cost_trace.size()},
                 {"n_dim", result.v.dim()},
                 {"times_us", data.times_us()},
                 {"shot_counts", data.shot_counts()},
                 {"fits",
                  {{"mean_n", r12(result.fits.mean_n)},
                   {"delta_n", r12(result.fits.delta_n)},
                   {"delta_n_fallback", result.fits.delta_n_fallback},
                   {"frequency_khz", r12(result.fits.frequency_khz)},
                   {"offset", r12(result.fits.offset)},
                   {"mean_rms_residual", r12(result.fits.mean_rms_residual)}}},
                 {"config", config_json(config)},
                 {"seed", seed},
                 {"input", in}};
  json trace = json::array();
  for (double c : result.cost_trace) trace.push_back(r12(c));
  report["cost_trace"] = trace;

  if (bootstrap_replicas > 0) {
    const qdt::BootstrapEnsemble ens = qdt::bootstrap(result, data, config);
    std::vector<double> sigmas, masses;
    for (const auto& rep : ens.replicas) {
      const qdt::ResolutionStats st = qdt::resolution_stats(
          rep.v, rep.rho, qdt::RabiParams(rep.omega_rad_per_s), data.times_us());
      sigmas.push_back(st.sigma);
      masses.push_back(st.diagonal_mass);
    }
    const qdt::SummaryStat sig = qdt::summarize(sigmas), mass = qdt::summarize(masses);
    report["bootstrap"] = {
        {"replicas", ens.replicas.size()},
        {"non_converged", ens.non_converged},
        {"omega_khz_mean", r12(qdt::cyclic_khz_from_omega(ens.omega.mean))},
        {"omega_khz_std", r12(qdt::cyclic_khz_from_omega(ens.omega.std))},
        {"final_cost_mean", r12(ens.final_cost.mean)},
        {"sigma_mean", r12(sig.mean)},
        {"sigma_std", r12(sig.std)},
        {"diagonal_mass_mean", r12(mass.mean)},
        {"diagonal_mass_std", r12(mass.std)}};
  }
  std::vector<qdt::LearningTestResult> tests;
  if (!learn_idx.empty()) {
    tests = qdt::learning_tests(data, learn_idx, config);
    report["learning_test"] = learning_json(tests);
  }

  const fs::path dir(out);
  ensure_dir(dir);
  qdt::write_detector(dir / "v.csv", result.v);
  qdt::write_state(dir / "rho.csv", result.rho);
  qdt::write_text_file(dir / "report.json", report.dump(2) + "\n");
  std::vector<std::string> outputs{"v.csv", "rho.csv", "report.json"};
  if (!tests.empty()) {
    write_learning_csv(dir / "learning_test.csv", tests);
    outputs.push_back("learning_test.csv");
  }
  append_manifest(dir, "reconstruct", config_json(config), {in}, outputs, seed, seconds_since(t0));
  std::cout << "final cost " << qdt::format_csv(result.final_cost) << " after "
            << result.cost_trace.size() << " outer iterations; omega "
            << qdt::format_csv(qdt::cyclic_khz_from_omega(result.omega_rad_per_s)) << " kHz\n";
  if (!result.converged) {
    std::cerr << "qdt: cost cutoff " << config.cost_cutoff << " not reached\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_learn_test(const std::string& in, const std::string& out, const EngineOpts& eo,
                   const std::string& indices) {
  const auto t0 = std::chrono::steady_clock::now();
  const qdt::HistogramDataset data = load_dataset(in);
  const std::uint64_t seed = resolve_seed(eo.seed);
  const qdt::TomographyConfig config = eo.config(seed);
  std::vector<std::size_t> idx;
  if (indices.empty() || indices == "all") {
    for (std::size_t j = 0; j < data.size(); ++j) idx.push_back(j);
  } else {
    idx = to_indices(parse_list(indices, "--indices"), data.size(), "--indices");
  }
  const std::vector<qdt::LearningTestResult> tests = qdt::learning_tests(data, idx, config);
  const fs::path dir(out);
  ensure_dir(dir);
  write_learning_csv(dir / "learning_test.csv", tests);
  qdt::write_text_file(dir / "learning_test.json",
                       json{{"tests", learning_json(tests)}, {"seed", seed}}.dump(2) + "\n");
  append_manifest(dir, "learn-test", config_json(config), {in},
                  {"learning_test.csv", "learning_test.json"}, seed, seconds_since(t0));
  for (const auto& t : tests) {
    std::cout << "t = " << qdt::format_csv(t.time_us) << " us: fidelity "
              << qdt::format_csv(t.fidelity) << "\n";
  }
  bool all_converged = true;
  for (const auto& t : tests) all_converged = all_converged && t.trained.converged;
  return all_converged ? kExitOk : kExitNotConverged;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeOpts {
  std::string result;
  std::string out;
  std::string wigner_n = "0,1,5,10";
  double extent = 6.0;
  std::size_t grid_points = 241;
  std::size_t fisher_points = 200;
  std::string fidelity_m;  // empty: 1, 5, 10, 15 where in range
  bool ideal = false;
};

int cmd_analyze(const AnalyzeOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path rdir(o.result);
  for (const char* f : {"v.csv", "rho.csv", "report.json"}) {
    if (!fs::exists(rdir / f)) throw UsageError("missing " + (rdir / f).string());
  }
  if (o.grid_points < 2) throw UsageError("--grid-points must be >= 2");
  const json report = json::parse(qdt::read_text_file(rdir / "report.json"));
  const qdt::DiagonalState rho = qdt::read_state(rdir / "rho.csv");
  const qdt::DetectorMatrix v_read = qdt::read_detector(rdir / "v.csv");
  const qdt::DetectorMatrix v = o.ideal ? qdt::DetectorMatrix::identity(v_read.dim()) : v_read;
  const qdt::RabiParams rabi(report.at("omega_r_rad_per_s").get<double>());
  const std::vector<double> times = report.at("times_us").get<std::vector<double>>();

  const fs::path dir(o.out.empty() ? o.result : o.out);
  ensure_dir(dir);
  std::vector<std::string> outputs;

  const qdt::PovmSet povm = qdt::povm_from_matrix(v);
  const std::vector<double> axis = qdt::linspace(-o.extent, o.extent, o.grid_points);
  json negativity = json::object();
  for (std::size_t n : to_indices(parse_list(o.wigner_n, "--wigner-n"), v.dim(), "--wigner-n")) {
    const qdt::WignerGrid grid = qdt::wigner(povm, n, axis, axis);
    std::ostringstream csv;
    csv << "x,p,value\n";
    for (std::size_t i = 0; i < axis.size(); ++i) {
      for (std::size_t k = 0; k < axis.size(); ++k) {
        csv << qdt::format_csv(axis[i]) << ',' << qdt::format_csv(axis[k]) << ','
            << qdt::format_csv(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)))
            << '\n';
      }
    }
    const std::string name = "wigner_n" + std::to_string(n) + ".csv";
    qdt::write_text_file(dir / name, csv.str());
    outputs.push_back(name);
    negativity[std::to_string(n)] = r12(qdt::wigner_negativity(grid));
  }

  // Fisher sweep over the open interval (0, pi).
  std::ostringstream fisher;
  fisher << "theta,F,F_ideal\n";
  const double n_mean = rho.mean();
  for (std::size_t i = 0; i < o.fisher_points; ++i) {
    const double theta = std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(o.fisher_points);
    const double c = std::cos(0.5 * theta);
    fisher << qdt::format_csv(theta) << ',' << qdt::format_csv(qdt::fisher_information(v, rho, theta))
           << ',' << qdt::format_csv(n_mean * c * c) << '\n';
  }
  qdt::write_text_file(dir / "fisher.csv", fisher.str());
  outputs.push_back("fisher.csv");

  const qdt::ResolutionStats stats = qdt::resolution_stats(v, rho, rabi, times);
  json offsets = json::array();
  for (std::size_t i = 0; i < stats.offset_dist.size(); ++i) {
    offsets.push_back({{"k", stats.k_min + static_cast<int>(i)}, {"p", r12(stats.offset_dist[i])}});
  }
  json fidelities = json::object();
  std::vector<std::size_t> fid_m;
  if (o.fidelity_m.empty()) {
    for (std::size_t m : {1u, 5u, 10u, 15u}) {
      if (m < v.dim()) fid_m.push_back(m);
    }
  } else {
    fid_m = to_indices(parse_list(o.fidelity_m, "--fidelity-m"), v.dim(), "--fidelity-m");
  }
  for (std::size_t m : fid_m) {
    fidelities[std::to_string(m)] = r12(qdt::assignment_fidelity(v, m));
  }
  const json analysis = {{"diagonal_mass", r12(stats.diagonal_mass)},
                         {"sigma", r12(stats.sigma)},
                         {"offset_dist", offsets},
                         {"assignment_fidelity", fidelities},
                         {"wigner_min", negativity},
                         {"ideal_detector", o.ideal},
                         {"n_mean", r12(n_mean)}};
  qdt::write_text_file(dir / "analysis.json", analysis.dump(2) + "\n");
  outputs.push_back("analysis.json");
  append_manifest(dir, "analyze",
                  {{"wigner_n", o.wigner_n}, {"extent", o.extent}, {"grid_points", o.grid_points},
                   {"fisher_points", o.fisher_points}, {"ideal", o.ideal}},
                  {o.result}, outputs, report.value("seed", std::uint64_t{0}), seconds_since(t0));
  std::cout << "diagonal mass " << qdt::format_csv(stats.diagonal_mass) << ", sigma "
            << qdt::format_csv(stats.sigma) << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- metrology

struct MetrologyOpts {
  std::string detector;  // v.csv path
  bool synthetic = false;
  bool ideal = false;
  double sigma = 0.4, dark = 0.27;
  double n_mean = 36.0;
  std::string dn = "0,1,2,3,4,5,6";
  double dn_slice = 6.0;
  std::string s;  // empty: default log grid
  std::string scaling_n = "30,50,100,200,300";
  int jobs = 1;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_metrology(const MetrologyOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const int sources = static_cast<int>(!o.detector.empty()) + static_cast<int>(o.synthetic) +
                      static_cast<int>(o.ideal);
  if (sources != 1) throw UsageError("give exactly one of --detector, --synthetic, --ideal");
  std::optional<qdt::DetectorMatrix> v;
  if (!o.detector.empty()) {
    if (!fs::exists(o.detector)) throw UsageError("detector not found: " + o.detector);
    v = qdt::read_detector(o.detector);
  } else if (o.synthetic) {
    qdt::SyntheticDetectorSpec spec;
    spec.sigma = o.sigma;
    spec.dark = qdt::DarkCountModel(o.dark);
    v = qdt::build_detector(spec);
  }
  const qdt::DetectorMatrix* vp = v ? &*v : nullptr;
  const std::vector<double> s_axis = o.s.empty() ? qdt::default_s_axis() : parse_list(o.s, "--s");
  const std::vector<double> dn_axis = parse_list(o.dn, "--dn");
  const std::vector<double> n_axis = parse_list(o.scaling_n, "--scaling-n");
  if (s_axis.empty() || dn_axis.empty()) throw UsageError("--s and --dn need at least one value");
  for (double s : s_axis) {
    if (!(s > 0)) throw UsageError("--s values must be > 0");
  }
  for (double d : dn_axis) {
    if (d < 0) throw UsageError("--dn values must be >= 0");
  }
  const std::uint64_t seed = resolve_seed(o.seed);

  const fs::path dir(o.out);
  ensure_dir(dir);
  const qdt::GainMap map = qdt::gain_map(o.n_mean, vp, s_axis, dn_axis, o.jobs);
  std::ostringstream map_csv;
  map_csv << "s,dn,G\n";
  json cells = json::array();
  for (std::size_t i = 0; i < s_axis.size(); ++i) {
    for (std::size_t k = 0; k < dn_axis.size(); ++k) {
      const auto ii = static_cast<Eigen::Index>(i), kk = static_cast<Eigen::Index>(k);
      map_csv << qdt::format_csv(s_axis[i]) << ',' << qdt::format_csv(dn_axis[k]) << ','
              << qdt::format_csv(map.gain(ii, kk)) << '\n';
      cells.push_back({{"s", s_axis[i]}, {"dn", dn_axis[k]}, {"G", r12(map.gain(ii, kk))},
                       {"theta_opt", r12(map.theta_opt(ii, kk))}});
    }
  }
  qdt::write_text_file(dir / "gain_map.csv", map_csv.str());

  // s sweep at one dn, with and without the detector.
  const qdt::GainMap slice = qdt::gain_map(o.n_mean, vp, s_axis, {o.dn_slice}, o.jobs);
  const qdt::GainMap slice_ideal = qdt::gain_map(o.n_mean, nullptr, s_axis, {o.dn_slice}, o.jobs);
  std::ostringstream vs_csv;
  vs_csv << "s,dn,G_ideal,G_noisy\n";
  for (std::size_t i = 0; i < s_axis.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    vs_csv << qdt::format_csv(s_axis[i]) << ',' << qdt::format_csv(o.dn_slice) << ','
           << qdt::format_csv(slice_ideal.gain(ii, 0)) << ',' << qdt::format_csv(slice.gain(ii, 0)) << '\n';
  }
  qdt::write_text_file(dir / "gain_vs_s.csv", vs_csv.str());

  std::vector<std::string> outputs{"gain_map.csv", "gain_vs_s.csv"};
  json scaling = json::array();
  if (!n_axis.empty()) {
    const auto ideal = qdt::gain_scaling(nullptr, n_axis, qdt::default_s_axis(), o.jobs);
    const auto noisy = vp ? qdt::gain_scaling(vp, n_axis, qdt::default_s_axis(), o.jobs) : ideal;
    std::ostringstream sc_csv;
    sc_csv << "n_mean,G_ideal,G_noisy\n";
    std::vector<double> gi;
    for (std::size_t i = 0; i < n_axis.size(); ++i) {
      sc_csv << qdt::format_csv(n_axis[i]) << ',' << qdt::format_csv(ideal[i].gain) << ','
             << qdt::format_csv(noisy[i].gain) << '\n';
      scaling.push_back({{"n_mean", n_axis[i]},
                         {"G_ideal", r12(ideal[i].gain)}, {"s_opt_ideal", r12(ideal[i].s_opt)},
                         {"G_noisy", r12(noisy[i].gain)}, {"s_opt_noisy", r12(noisy[i].s_opt)}});
      gi.push_back(ideal[i].gain);
    }
    qdt::write_text_file(dir / "gain_scaling.csv", sc_csv.str());
    outputs.push_back("gain_scaling.csv");
    if (n_axis.size() >= 2) {
      std::cout << "ideal scaling exponent " << qdt::format_csv(qdt::power_law_exponent(n_axis, gi)) << "\n";
    }
  }
  Eigen::Index bi = 0, bk = 0;
  const double best = map.gain.maxCoeff(&bi, &bk);
  const json report = {{"n_mean", o.n_mean},
                       {"detector", o.ideal ? "ideal" : (o.synthetic ? "synthetic" : o.detector)},
                       {"cells", cells},
                       {"best", {{"G", r12(best)}, {"dB", r12(qdt::gain_db(best))},
                                 {"s", s_axis[static_cast<std::size_t>(bi)]},
                                 {"dn", dn_axis[static_cast<std::size_t>(bk)]},
                                 {"theta_opt", r12(map.theta_opt(bi, bk))}}},
                       {"scaling", scaling}};
  qdt::write_text_file(dir / "report.json", report.dump(2) + "\n");
  outputs.push_back("report.json");
  const json config = {{"n_mean", o.n_mean}, {"dn", dn_axis},       {"dn_slice", o.dn_slice},
                       {"s", s_axis},        {"scaling_n", n_axis}, {"sigma", o.sigma},
                       {"dark", o.dark}};
  append_manifest(dir, "metrology", config, o.detector.empty() ? std::vector<std::string>{}
                                                                : std::vector<std::string>{o.detector},
                  outputs, seed, seconds_since(t0));
  std::cout << "best G " << qdt::format_csv(best) << " (" << qdt::format_csv(qdt::gain_db(best))
            << " dB)\n";
  return kExitOk;
}

void add_engine_options(CLI::App* cmd, EngineOpts& eo) {
  cmd->add_option("--cutoff", eo.cutoff, "Stop when the summed Hellinger cost reaches this value");
  cmd->add_option("--max-outer", eo.max_outer, "Outer iteration limit");
  cmd->add_option("--inner-v", eo.inner_v, "V steps per outer iteration");
  cmd->add_option("--inner-rho", eo.inner_rho, "rho steps per outer iteration");
  cmd->add_option("--inner-omega", eo.inner_omega, "Omega steps per outer iteration");
  cmd->add_option("--step-v", eo.step_v, "Initial V step");
  cmd->add_option("--step-rho", eo.step_rho, "Initial rho step");
  cmd->add_option("--step-omega", eo.step_omega, "Initial log-omega step");
  cmd->add_option("--cost", eo.cost, "hellinger or kl");
  cmd->add_option("--seed", eo.seed, "RNG seed (default: $QDT_SEED, else 1)");
  cmd->add_option("--jobs", eo.jobs, "Worker threads for bootstrap and learning tests");
  cmd->add_option("--n-max", eo.n_max, "Minimum outcome range (default: max observed count)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum detector tomography for atom-counting detectors.\n"
               "Frequencies are cyclic, in kHz (omega = 2 pi f); times in microseconds."};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Sample a synthetic dataset and its true detector");
  simulate->add_option("--times", sim.times, "Comma-separated pulse durations (us)");
  simulate->add_option("--shots", sim.shots, "Shots per time");
  simulate->add_option("--omega-khz", sim.omega_khz, "Rabi frequency f in kHz (omega = 2 pi f)");
  simulate->add_option("--n-mean", sim.n_mean, "Mean total atom number");
  simulate->add_option("--n-std", sim.n_std, "Total atom number standard deviation");
  simulate->add_option("--sigma", sim.sigma, "Detector counting noise (atoms)");
  simulate->add_option("--dark", sim.dark, "Mean dark counts");
  simulate->add_option("--loss", sim.loss, "Atom loss probability");
  simulate->add_option("--n-max", sim.n_max, "Largest outcome of the true detector");
  simulate->add_option("--kernel", sim.kernel, "Blur discretization: point or bin");
  simulate->add_option("--format", sim.format, "csv, json or both");
  simulate->add_option("--seed", sim.seed, "RNG seed (default: $QDT_SEED, else 1)");
  simulate->add_option("--out", sim.out, "Output directory")->required();

  EngineOpts rec_eo;
  std::string rec_in, rec_out, rec_learn;
  int rec_boot = 0;
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct V, rho and omega from a dataset");
  rec->add_option("--in", rec_in, "Dataset file (.csv or .json)")->required();
  rec->add_option("--out", rec_out, "Result directory")->required();
  rec->add_option("--bootstrap", rec_boot, "Bootstrap replicas (0: none)");
  rec->add_option("--learn-test", rec_learn, "Held-out time indices, comma-separated, or 'all'");
  add_engine_options(rec, rec_eo);

  EngineOpts lt_eo;
  std::string lt_in, lt_out, lt_idx;
  auto* lt = app.add_subcommand("learn-test", "Leave-one-out prediction fidelities");
  lt->add_option("--in", lt_in, "Dataset file (.csv or .json)")->required();
  lt->add_option("--out", lt_out, "Output directory")->required();
  lt->add_option("--indices", lt_idx, "Held-out time indices, comma-separated, or 'all'");
  add_engine_options(lt, lt_eo);

  AnalyzeOpts an;
  auto* analyze = app.add_subcommand("analyze", "POVM, Wigner, resolution and Fisher analysis");
  analyze->add_option("--result", an.result, "Result directory from reconstruct")->required();
  analyze->add_option("--out", an.out, "Output directory (default: the result directory)");
  analyze->add_option("--wigner-n", an.wigner_n, "Outcomes to render, comma-separated");
  analyze->add_option("--extent", an.extent, "Phase-space half width");
  analyze->add_option("--grid-points", an.grid_points, "Points per phase-space axis");
  analyze->add_option("--fisher-points", an.fisher_points, "Points in the theta sweep");
  analyze->add_option("--fidelity-m", an.fidelity_m, "Arrival numbers for assignment fidelity (default 1,5,10,15)");
  analyze->add_flag("--ideal", an.ideal, "Replace V by the identity");

  MetrologyOpts mo;
  auto* met = app.add_subcommand("metrology", "Squeezed-state phase sensitivity gain");
  met->add_option("--detector", mo.detector, "Detector matrix (v.csv)");
  met->add_flag("--synthetic", mo.synthetic, "Use the synthetic detector (--sigma, --dark)");
  met->add_flag("--ideal", mo.ideal, "Ideal counting");
  met->add_option("--sigma", mo.sigma, "Synthetic detector counting noise");
  met->add_option("--dark", mo.dark, "Synthetic detector dark counts");
  met->add_option("--n-mean", mo.n_mean, "Mean atom number for the map");
  met->add_option("--dn", mo.dn, "Atom number fluctuations, comma-separated");
  met->add_option("--dn-slice", mo.dn_slice, "dn used for gain_vs_s.csv");
  met->add_option("--s", mo.s, "Squeezing parameters, comma-separated (default: log grid 0.01..1)");
  met->add_option("--scaling-n", mo.scaling_n, "Mean atom numbers for the scaling curve ('' to skip)");
  met->add_option("--jobs", mo.jobs, "Worker threads");
  met->add_option("--seed", mo.seed, "Recorded in the manifest");
  met->add_option("--out", mo.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*rec) return cmd_reconstruct(rec_in, rec_out, rec_eo, rec_boot, rec_learn);
    if (*lt) return cmd_learn_test(lt_in, lt_out, lt_eo, lt_idx);
    if (*analyze) return cmd_analyze(an);
    if (*met) return cmd_metrology(mo);
  } catch (const UsageError& e) {
    std::cerr << "qdt: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "qdt: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
