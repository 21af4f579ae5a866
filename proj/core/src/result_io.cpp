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

#include "qdt/result_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qdt {
namespace {

std::vector<double> split_numbers(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) comma = line.size();
    std::string_view field(line.data() + start, comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": malformed number '" +
                               std::string(field) + "'");
    }
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_csv(double x) {
  std::array<char, 48> buf{};
  const auto [ptr, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 12);
  if (ec != std::errc()) throw std::runtime_error("format_csv: conversion failed");
  return std::string(buf.data(), ptr);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_csv(m(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_numbers(line, line_no));
    if (rows.back().size() != rows.front().size()) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": ragged matrix row");
    }
  }
  if (rows.empty()) throw std::runtime_error("empty matrix file");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

void write_detector(const std::filesystem::path& path, const DetectorMatrix& v) {
  std::ostringstream out;
  write_matrix_csv(out, v.matrix());
  write_text_file(path, out.str());
}

DetectorMatrix read_detector(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  try {
    return DetectorMatrix(read_matrix_csv(in));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_state(const std::filesystem::path& path, const DiagonalState& rho) {
  std::ostringstream out;
  out << "N,rho\n";
  for (std::size_t n = 0; n < rho.size(); ++n) out << n << ',' << format_csv(rho[n]) << '\n';
  write_text_file(path, out.str());
}

DiagonalState read_state(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);
  if (line.rfind("N,rho", 0) != 0) throw std::runtime_error(path.string() + ": expected header 'N,rho'");
  std::vector<double> rho;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<double> f = split_numbers(line, line_no);
    if (f.size() != 2 || f[0] != static_cast<double>(rho.size())) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) +
                               ": expected 'N,rho' with consecutive N");
    }
    rho.push_back(f[1]);
  }
  return DiagonalState(ProbVector::from_weights(std::move(rho)));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace qdt
