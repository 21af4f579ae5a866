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

// Result directories. v.csv holds V with row n and column m and no header;
// rho.csv has header `N,rho`. Numbers carry 12 significant digits.

#ifndef QDT_RESULT_IO_HPP_
#define QDT_RESULT_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdt/prob.hpp"

namespace qdt {

/// 12 significant digits, shortest of fixed/scientific.
std::string format_csv(double x);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(std::istream& in);

void write_detector(const std::filesystem::path& path, const DetectorMatrix& v);
DetectorMatrix read_detector(const std::filesystem::path& path);

void write_state(const std::filesystem::path& path, const DiagonalState& rho);
DiagonalState read_state(const std::filesystem::path& path);

/// Writes `text` to `path` atomically enough for CLI use (temp file + rename).
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace qdt

#endif  // QDT_RESULT_IO_HPP_
