/*
 * Copyright 2026 The fairtune Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairtune/matrix.hpp"

namespace fairtune {

// A binary sensitive attribute column. Group a is value 0, group b value 1.
struct SensitiveColumn {
  std::string name;
  std::vector<std::uint8_t> values;

  bool operator==(const SensitiveColumn&) const = default;
};

// Feature matrix, binary labels and named binary sensitive attributes.
//
// Construction validates every invariant: equal column lengths, {0,1}
// labels and attribute values, and at least one row in each of the four
// (group, label) cells of every attribute. A Dataset that exists is valid.
class Dataset {
 public:
  Dataset(Matrix features, std::vector<std::uint8_t> labels,
          std::vector<SensitiveColumn> sensitive,
          std::vector<std::string> feature_names = {});

  std::size_t rows() const { return features_.rows(); }
  std::size_t feature_count() const { return features_.cols(); }

  const Matrix& features() const { return features_; }
  std::span<const std::uint8_t> labels() const { return labels_; }
  const std::vector<SensitiveColumn>& sensitive() const { return sensitive_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  bool has_attribute(std::string_view name) const;
  // Throws ConfigError for unknown names.
  std::span<const std::uint8_t> attribute(std::string_view name) const;
  std::vector<std::string> attribute_names() const;

  // Rows in the given order; the result is validated like any Dataset.
  Dataset subset(std::span<const std::size_t> rows) const;

  bool operator==(const Dataset&) const = default;

 private:
  Matrix features_;
  std::vector<std::uint8_t> labels_;
  std::vector<SensitiveColumn> sensitive_;
  std::vector<std::string> feature_names_;
};

// Reads a header-first, comma-separated file. Every column that is neither
// the label nor a sensitive attribute becomes a feature, in header order.
Dataset load_csv(const std::filesystem::path& path,
                 std::string_view label_column,
                 std::span<const std::string> sensitive_columns);

// Writes features, then sensitive attributes, then the label column.
void write_csv(const Dataset& data, const std::filesystem::path& path,
               std::string_view label_column = "y");

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

// Stratifies on the joint key (label, every sensitive attribute). Within a
// stratum rows are ordered by content, then shuffled by the seeded stream,
// so the assignment does not depend on file order.
SplitIndices split_indices(const Dataset& data, const SplitSpec& spec);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};
TrainTestSplit stratified_split(const Dataset& data, const SplitSpec& spec);

// Indices i with attribute_i == group and label_i == label.
std::vector<std::size_t> group_view(const Dataset& data,
                                    std::string_view attribute,
                                    std::uint8_t group, std::uint8_t label);

// Per-column z-scoring. Fit on training rows only and reuse for test rows.
class Standardizer {
 public:
  static Standardizer fit(const Dataset& train);
  Dataset apply(const Dataset& data) const;

  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& scales() const { return scales_; }

 private:
  std::vector<double> means_;
  std::vector<double> scales_;
};

}  // namespace fairtune
