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

#include "fairtune/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "fairtune/error.hpp"
#include "fairtune/rng.hpp"

namespace fairtune {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    cells.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

std::string cell_context(std::size_t row, std::string_view column) {
  std::ostringstream os;
  os << "row " << row << ", column " << column;
  return os.str();
}

std::uint8_t parse_binary(const std::string& cell, std::size_t row,
                          std::string_view column) {
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  if (cell.empty()) throw DataError("empty cell at " + cell_context(row, column));
  throw DataError("non-binary value '" + cell + "' at " +
                  cell_context(row, column));
}

double parse_real(const std::string& cell, std::size_t row,
                  std::string_view column) {
  if (cell.empty()) throw DataError("empty cell at " + cell_context(row, column));
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw DataError("non-numeric value '" + cell + "' at " +
                    cell_context(row, column));
  }
  return value;
}

void check_binary(std::span<const std::uint8_t> values, std::string_view what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 1) {
      throw DataError("non-binary value at " + cell_context(i + 1, what));
    }
  }
}

}  // namespace

Dataset::Dataset(Matrix features, std::vector<std::uint8_t> labels,
                 std::vector<SensitiveColumn> sensitive,
                 std::vector<std::string> feature_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      sensitive_(std::move(sensitive)),
      feature_names_(std::move(feature_names)) {
  const std::size_t n = features_.rows();
  if (n == 0) throw DataError("dataset has no rows");
  if (features_.cols() == 0) throw DataError("dataset has no feature columns");
  if (labels_.size() != n) {
    throw DataError("label column length differs from feature rows");
  }
  check_binary(labels_, "label");
  if (feature_names_.empty()) {
    for (std::size_t j = 0; j < features_.cols(); ++j) {
      feature_names_.push_back("x" + std::to_string(j));
    }
  } else if (feature_names_.size() != features_.cols()) {
    throw DataError("feature name count differs from feature columns");
  }
  for (double v : features_.values()) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
  for (std::size_t a = 0; a < sensitive_.size(); ++a) {
    const auto& col = sensitive_[a];
    for (std::size_t b = 0; b < a; ++b) {
      if (sensitive_[b].name == col.name) {
        throw DataError("duplicate sensitive attribute '" + col.name + "'");
      }
    }
    if (col.values.size() != n) {
      throw DataError("sensitive column '" + col.name +
                      "' length differs from feature rows");
    }
    check_binary(col.values, col.name);
    std::size_t cells[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < n; ++i) ++cells[col.values[i]][labels_[i]];
    for (int g = 0; g < 2; ++g) {
      for (int y = 0; y < 2; ++y) {
        if (cells[g][y] == 0) {
          throw DataError("empty (group,label) cell for attribute '" +
                          col.name + "' (group " + std::to_string(g) +
                          ", label " + std::to_string(y) + ")");
        }
      }
    }
  }
}

bool Dataset::has_attribute(std::string_view name) const {
  return std::any_of(sensitive_.begin(), sensitive_.end(),
                     [&](const SensitiveColumn& c) { return c.name == name; });
}

std::span<const std::uint8_t> Dataset::attribute(std::string_view name) const {
  for (const auto& col : sensitive_) {
    if (col.name == name) return col.values;
  }
  throw ConfigError("unknown sensitive attribute '" + std::string(name) + "'");
}

std::vector<std::string> Dataset::attribute_names() const {
  std::vector<std::string> names;
  for (const auto& col : sensitive_) names.push_back(col.name);
  return names;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Matrix x(rows.size(), feature_count());
  std::vector<std::uint8_t> y(rows.size());
  std::vector<SensitiveColumn> z;
  for (const auto& col : sensitive_) z.push_back({col.name, {}});
  for (auto& col : z) col.values.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= this->rows()) throw ConfigError("subset row index out of range");
    std::copy_n(features_.row(r).begin(), feature_count(), x.row(i).begin());
    y[i] = labels_[r];
    for (std::size_t a = 0; a < z.size(); ++a) {
      z[a].values[i] = sensitive_[a].values[r];
    }
  }
  return Dataset(std::move(x), std::move(y), std::move(z), feature_names_);
}

Dataset load_csv(const std::filesystem::path& path,
                 std::string_view label_column,
                 std::span<const std::string> sensitive_columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("'" + path.string() + "' has no header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  const std::vector<std::string> header = split_line(line);
  auto find_column = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ConfigError("column '" + std::string(name) + "' not found in '" +
                        path.string() + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_idx = find_column(label_column);
  std::vector<std::size_t> sensitive_idx;
  for (const auto& name : sensitive_columns) {
    sensitive_idx.push_back(find_column(name));
  }
  std::vector<std::size_t> feature_idx;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_idx) continue;
    if (std::find(sensitive_idx.begin(), sensitive_idx.end(), c) !=
        sensitive_idx.end()) {
      continue;
    }
    feature_idx.push_back(c);
    feature_names.push_back(header[c]);
  }

  std::vector<double> values;
  std::vector<std::uint8_t> labels;
  std::vector<SensitiveColumn> sensitive;
  for (const auto& name : sensitive_columns) sensitive.push_back({name, {}});
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    for (std::size_t c : feature_idx) {
      values.push_back(parse_real(cells[c], row, header[c]));
    }
    labels.push_back(parse_binary(cells[label_idx], row, header[label_idx]));
    for (std::size_t a = 0; a < sensitive_idx.size(); ++a) {
      const std::size_t c = sensitive_idx[a];
      sensitive[a].values.push_back(parse_binary(cells[c], row, header[c]));
    }
  }
  Matrix x(row, feature_idx.size(), std::move(values));
  return Dataset(std::move(x), std::move(labels), std::move(sensitive),
                 std::move(feature_names));
}

void write_csv(const Dataset& data, const std::filesystem::path& path,
               std::string_view label_column) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  const auto& names = data.feature_names();
  for (const auto& name : names) out << name << ',';
  for (const auto& col : data.sensitive()) out << col.name << ',';
  out << label_column << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (double v : data.features().row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    for (const auto& col : data.sensitive()) out << int(col.values[i]) << ',';
    out << int(data.labels()[i]) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

SplitIndices split_indices(const Dataset& data, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0,1)");
  }
  const double n = static_cast<double>(data.rows());
  if (spec.train_fraction * n < 1.0 || (1.0 - spec.train_fraction) * n < 1.0) {
    throw ConfigError("train_fraction leaves one side of the split empty");
  }
  std::map<std::vector<std::uint8_t>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    std::vector<std::uint8_t> key{data.labels()[i]};
    for (const auto& col : data.sensitive()) key.push_back(col.values[i]);
    strata[key].push_back(i);
  }
  const Matrix& x = data.features();
  Rng rng(spec.seed);
  SplitIndices out;
  for (auto& [key, rows] : strata) {
    if (rows.size() < 2) {
      throw DataError("stratum with " + std::to_string(rows.size()) +
                      " row cannot be split");
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) {
                       const auto ra = x.row(a);
                       const auto rb = x.row(b);
                       return std::lexicographical_compare(
                           ra.begin(), ra.end(), rb.begin(), rb.end());
                     });
    rng.shuffle(std::span<std::size_t>(rows));
    const double share = spec.train_fraction * static_cast<double>(rows.size());
    std::size_t take = static_cast<std::size_t>(std::llround(share));
    take = std::clamp<std::size_t>(take, 1, rows.size() - 1);
    out.train.insert(out.train.end(), rows.begin(), rows.begin() + take);
    out.test.insert(out.test.end(), rows.begin() + take, rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

TrainTestSplit stratified_split(const Dataset& data, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(data, spec);
  return {data.subset(idx.train), data.subset(idx.test)};
}

std::vector<std::size_t> group_view(const Dataset& data,
                                    std::string_view attribute,
                                    std::uint8_t group, std::uint8_t label) {
  const auto z = data.attribute(attribute);
  const auto y = data.labels();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == group && y[i] == label) out.push_back(i);
  }
  return out;
}

Standardizer Standardizer::fit(const Dataset& train) {
  const std::size_t n = train.rows();
  const std::size_t d = train.feature_count();
  Standardizer s;
  s.means_.assign(d, 0.0);
  s.scales_.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += train.features()(i, j);
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = train.features()(i, j) - mean;
      sq += dv * dv;
    }
    const double sd = std::sqrt(sq / static_cast<double>(n));
    s.means_[j] = mean;
    s.scales_[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Dataset Standardizer::apply(const Dataset& data) const {
  if (data.feature_count() != means_.size()) {
    throw ConfigError("standardizer width differs from dataset width");
  }
  Matrix x = data.features();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = (row[j] - means_[j]) / scales_[j];
    }
  }
  std::vector<std::uint8_t> labels(data.labels().begin(), data.labels().end());
  return Dataset(std::move(x), std::move(labels), data.sensitive(),
                 data.feature_names());
}

}  // namespace fairtune
