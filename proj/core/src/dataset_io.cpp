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

#include "qdt/dataset_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qdt {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* what) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) throw DatasetParseError(line, std::string("empty ") + what);
  if constexpr (std::is_unsigned_v<T>) {
    if (field.front() == '-') throw DatasetParseError(line, std::string("negative ") + what);
  }
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DatasetParseError(line, std::string("malformed ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

// Groups counts by time, summing repeats. Times must arrive non-decreasing.
struct CountAccumulator {
  std::vector<double> times;
  std::vector<std::vector<std::uint64_t>> counts;

  void add(double t, std::size_t n, std::uint64_t c, std::size_t line) {
    if (!std::isfinite(t) || t < 0.0) throw DatasetParseError(line, "time must be finite and >= 0");
    if (times.empty() || t > times.back()) {
      times.push_back(t);
      counts.emplace_back();
    } else if (t < times.back()) {
      throw DatasetParseError(line, "time " + format_exact(t) + " after " +
                                        format_exact(times.back()) + " (times must not decrease)");
    }
    auto& row = counts.back();
    if (row.size() <= n) row.resize(n + 1, 0);
    row[n] += c;
  }

  HistogramDataset finish() {
    if (times.empty()) throw DatasetParseError(0, "dataset has no rows");
    for (std::size_t j = 0; j < counts.size(); ++j) {
      std::uint64_t total = 0;
      for (auto c : counts[j]) total += c;
      if (total == 0) {
        throw DatasetParseError(0, "no counts at time " + format_exact(times[j]));
      }
    }
    return HistogramDataset::from_counts(std::move(times), std::move(counts));
  }
};

void require_counts(const HistogramDataset& data) {
  if (!data.has_counts()) {
    throw std::invalid_argument("write_dataset: dataset carries no raw counts");
  }
}

}  // namespace

std::string format_exact(double x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("format_exact: conversion failed");
  return std::string(buf.data(), ptr);
}

HistogramDataset read_dataset_csv(std::istream& in) {
  CountAccumulator acc;
  std::string raw;
  std::size_t line = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    if (!header_seen) {
      if (text != "time_us,n,count") {
        throw DatasetParseError(line, "expected header 'time_us,n,count'");
      }
      header_seen = true;
      continue;
    }
    std::array<std::string_view, 3> fields;
    std::size_t start = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t comma = text.find(',', start);
      if ((k < 2) == (comma == std::string_view::npos)) {
        throw DatasetParseError(line, "expected 3 comma-separated fields");
      }
      fields[k] = text.substr(start, k < 2 ? comma - start : std::string_view::npos);
      start = comma + 1;
    }
    const auto t = parse_field<double>(fields[0], line, "time");
    const auto n = parse_field<std::size_t>(fields[1], line, "n");
    const auto c = parse_field<std::uint64_t>(fields[2], line, "count");
    acc.add(t, n, c, line);
  }
  if (!header_seen) throw DatasetParseError(0, "empty dataset file");
  return acc.finish();
}

HistogramDataset read_dataset_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DatasetParseError(0, std::string("JSON parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("times_us") || !doc.contains("counts")) {
    throw DatasetParseError(0, "JSON dataset needs 'times_us' and 'counts'");
  }
  const auto& times = doc.at("times_us");
  const auto& counts = doc.at("counts");
  if (!times.is_array() || !counts.is_array() || times.size() != counts.size()) {
    throw DatasetParseError(0, "'times_us' and 'counts' must be arrays of equal length");
  }
  CountAccumulator acc;
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!times[j].is_number()) throw DatasetParseError(0, "times_us[" + std::to_string(j) + "] not a number");
    if (!counts[j].is_array()) throw DatasetParseError(0, "counts[" + std::to_string(j) + "] not an array");
    const double t = times[j].get<double>();
    for (std::size_t n = 0; n < counts[j].size(); ++n) {
      const auto& c = counts[j][n];
      if (!c.is_number_integer() || (!c.is_number_unsigned() && c.get<std::int64_t>() < 0)) {
        throw DatasetParseError(0, "counts[" + std::to_string(j) + "][" + std::to_string(n) +
                                       "] must be a non-negative integer");
      }
      acc.add(t, n, c.get<std::uint64_t>(), 0);
    }
  }
  return acc.finish();
}

HistogramDataset ingest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  if (path.extension() == ".json") return read_dataset_json(in);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const HistogramDataset& data) {
  require_counts(data);
  out << "time_us,n,count\n";
  for (std::size_t j = 0; j < data.size(); ++j) {
    const std::string t = format_exact(data.times_us()[j]);
    const auto& row = data.counts()[j];
    for (std::size_t n = 0; n < row.size(); ++n) out << t << ',' << n << ',' << row[n] << '\n';
  }
}

void write_dataset_json(std::ostream& out, const HistogramDataset& data) {
  require_counts(data);
  nlohmann::json doc;
  doc["times_us"] = data.times_us();
  doc["counts"] = data.counts();
  out << doc.dump() << '\n';
}

void write_dataset(const std::filesystem::path& path, const HistogramDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (path.extension() == ".json") {
    write_dataset_json(out, data);
  } else {
    write_dataset_csv(out, data);
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace qdt
