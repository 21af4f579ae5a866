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

// Dataset files.
//
// CSV: header `time_us,n,count`, one row per (time, n) with a raw integer
// count. Rows are grouped by non-decreasing time; rows repeating a
// (time, n) pair are summed. JSON: {"times_us": [...], "counts": [[...], ...]}
// with counts[j][n]. Times are written in shortest round-trip form, so a
// write followed by a read reproduces the dataset bit for bit.

#ifndef QDT_DATASET_IO_HPP_
#define QDT_DATASET_IO_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "qdt/prob.hpp"

namespace qdt {

/// Malformed dataset input. line() is 1-based; 0 when not tied to a line.
class DatasetParseError : public std::runtime_error {
 public:
  DatasetParseError(std::size_t line, const std::string& reason)
      : std::runtime_error(line == 0 ? reason : "line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

HistogramDataset read_dataset_csv(std::istream& in);
HistogramDataset read_dataset_json(std::istream& in);

/// Reads a dataset file; `.json` selects the JSON reader, anything else CSV.
HistogramDataset ingest(const std::filesystem::path& path);

/// Writers require raw counts (data.has_counts()).
void write_dataset_csv(std::ostream& out, const HistogramDataset& data);
void write_dataset_json(std::ostream& out, const HistogramDataset& data);
void write_dataset(const std::filesystem::path& path, const HistogramDataset& data);

/// Shortest decimal string that parses back to exactly `x`.
std::string format_exact(double x);

}  // namespace qdt

#endif  // QDT_DATASET_IO_HPP_
