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

#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qdt/dataset_io.hpp"
#include "qdt/result_io.hpp"
#include "qdt/simulator.hpp"

namespace qdt {
namespace {

HistogramDataset sample() {
  ExperimentPlan plan;
  plan.times_us = {0, 2.5, 7.25};
  plan.shots_per_time = 300;
  plan.rabi = RabiParams(omega_from_cyclic_khz(8.2));
  plan.state = DiagonalState::gaussian(12.0, 2.0);
  plan.rng_seed = 2;
  SyntheticDetectorSpec spec{0.4, DarkCountModel(0.27), 0.0, 30, BlurKernel::kPointSampled};
  return sample_dataset(plan, build_detector(spec));
}

std::size_t error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_dataset_csv(in);
  } catch (const DatasetParseError& e) {
    return e.line();
  }
  return static_cast<std::size_t>(-1);
}

TEST(DatasetIo, CsvRoundTripIsExact) {
  const HistogramDataset d = sample();
  std::stringstream s;
  write_dataset_csv(s, d);
  const HistogramDataset r = read_dataset_csv(s);
  EXPECT_EQ(r.times_us(), d.times_us());
  EXPECT_EQ(r.counts(), d.counts());
  EXPECT_EQ(r.shot_counts(), d.shot_counts());
}

TEST(DatasetIo, JsonRoundTripIsExact) {
  const HistogramDataset d = sample();
  std::stringstream s;
  write_dataset_json(s, d);
  const HistogramDataset r = read_dataset_json(s);
  EXPECT_EQ(r.times_us(), d.times_us());
  EXPECT_EQ(r.counts(), d.counts());
}

TEST(DatasetIo, CommentsBlankLinesAndDuplicates) {
  std::istringstream in("# measured\ntime_us,n,count\n\n0,0,5\n0,1,3\n0,1,2\n4,2,10\n");
  const HistogramDataset d = read_dataset_csv(in);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.counts()[0][1], 5u);
  EXPECT_EQ(d.shot_counts()[0], 10u);
  EXPECT_EQ(d.shot_counts()[1], 10u);
}

TEST(DatasetIo, ErrorsNameTheLine) {
  EXPECT_EQ(error_line("time_us,n,count\n0,0,5\n0,1,-3\n"), 3u);
  EXPECT_EQ(error_line("time_us,n,count\n0,0,5\n0,x,3\n"), 3u);
  EXPECT_EQ(error_line("time_us,n,count\n4,0,5\n0,1,3\n"), 3u);
  EXPECT_EQ(error_line("time_us,n,count\n0,0\n"), 2u);
  EXPECT_EQ(error_line("t,n,c\n0,0,1\n"), 1u);
}

TEST(DatasetIo, FormatExactRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    EXPECT_EQ(std::stod(format_exact(x)), x);
  }
}

TEST(ResultIo, DetectorAndStateRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "qdt_io_test";
  std::filesystem::create_directories(dir);
  SyntheticDetectorSpec spec{0.4, DarkCountModel(0.27), 0.0, 15, BlurKernel::kPointSampled};
  const DetectorMatrix v = build_detector(spec);
  write_detector(dir / "v.csv", v);
  const DetectorMatrix w = read_detector(dir / "v.csv");
  EXPECT_LT((w.matrix() - v.matrix()).cwiseAbs().maxCoeff(), 1e-11);
  const DiagonalState rho = DiagonalState::gaussian(10.0, 2.0);
  write_state(dir / "rho.csv", rho);
  const DiagonalState back = read_state(dir / "rho.csv");
  ASSERT_EQ(back.size(), rho.size());
  for (std::size_t n = 0; n < rho.size(); ++n) EXPECT_NEAR(back[n], rho[n], 1e-12);
  std::filesystem::remove_all(dir);
}

TEST(ResultIo, RejectsRaggedMatrix) {
  std::istringstream in("1,0\n0\n");
  EXPECT_THROW(read_matrix_csv(in), std::runtime_error);
}

TEST(ResultIo, FormatHasTwelveDigits) {
  EXPECT_EQ(format_csv(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_csv(0.0), "0");
}

}  // namespace
}  // namespace qdt
