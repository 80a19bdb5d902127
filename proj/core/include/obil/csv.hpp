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

#ifndef OBIL_CSV_HPP_
#define OBIL_CSV_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "obil/dataset.hpp"

namespace obil {

struct CsvIngest {
  LabeledDataset data;
  std::vector<std::string> feature_names;
  std::size_t n = 0;
  std::size_t d = 0;
  double imbalance_ratio = 0.0;
};

// Comma-separated with a header row. The label column is matched by name;
// a row is positive iff its label cell equals positive_value after
// trimming. Every other cell must be a finite number.
CsvIngest ingest_csv(std::istream& in, const std::string& label_column,
                     const std::string& positive_value);
CsvIngest ingest_csv(const std::filesystem::path& path, const std::string& label_column,
                     const std::string& positive_value);

// Header x0..x{d-1},label; labels written as 0/1.
void write_csv(std::ostream& out, const LabeledDataset& data);

}  // namespace obil

#endif  // OBIL_CSV_HPP_
