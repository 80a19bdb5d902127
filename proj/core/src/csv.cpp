// Copyright 2026 The OBIL Authors.
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

#include "obil/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

#include "obil/error.hpp"
#include "text_io.hpp"

namespace obil {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

}  // namespace

CsvIngest ingest_csv(std::istream& in, const std::string& label_column,
                     const std::string& positive_value) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kSchemaError, "missing header row");
  const auto header = split_cells(line);
  const auto label_it = std::find(header.begin(), header.end(), std::string_view(label_column));
  if (label_it == header.end()) {
    throw Error(ErrorCode::kSchemaError, "label column '" + label_column + "' not found");
  }
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  CsvIngest out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != label_col) out.feature_names.emplace_back(header[j]);
  }
  const std::size_t d = out.feature_names.size();
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t row = 0;
  const std::string_view positive = trim(positive_value);
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kParseError, "row " + std::to_string(row) + ": expected " +
                                              std::to_string(header.size()) + " cells, got " +
                                              std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == label_col) {
        labels.push_back(cells[j] == positive ? 1 : 0);
        continue;
      }
      double v = 0.0;
      const auto* first = cells[j].data();
      const auto* last = first + cells[j].size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (cells[j].empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw Error(ErrorCode::kParseError, "row " + std::to_string(row) + ", column " +
                                                std::to_string(j + 1) + " ('" + std::string(header[j]) +
                                                "'): not a finite number: '" +
                                                std::string(cells[j]) + "'");
      }
      values.push_back(v);
    }
  }
  const std::size_t n = labels.size();
  out.data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          values[i * d + j];
    }
  }
  out.data.labels = std::move(labels);
  out.n = n;
  out.d = d;
  out.imbalance_ratio = out.data.imbalance_ratio();
  return out;
}

CsvIngest ingest_csv(const std::filesystem::path& path, const std::string& label_column,
                     const std::string& positive_value) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return ingest_csv(in, label_column, positive_value);
}

void write_csv(std::ostream& out, const LabeledDataset& data) {
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << j << ',';
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) {
      out << detail::format_double(
                 data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
          << ',';
    }
    out << data.labels[i] << '\n';
  }
}

}  // namespace obil
