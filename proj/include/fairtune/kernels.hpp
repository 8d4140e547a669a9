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

// Row-parallel kernels behind the model, fairness and metric code.
//
// Reductions are blocked: rows are cut into fixed blocks of kBlockRows,
// each block is summed serially, and block partials are combined in block
// order. The result is therefore identical for any OpenMP thread count.
// kernels::serial holds straight-line references used by the tests and the
// benchmark; they agree with the blocked kernels up to summation order.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fairtune/matrix.hpp"

namespace fairtune::kernels {

inline constexpr std::size_t kBlockRows = 1024;

// Unnormalized BCE sums: loss is the sum of per-row losses, gradients the
// sums of (p - y) x and (p - y).
struct BceSums {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
  std::size_t count = 0;
};

// Cell index for (group, label) pairs.
constexpr std::size_t cell_index(std::uint8_t group, std::uint8_t label) {
  return 2u * group + label;
}

// Per (group, label) cell: row count, sum of sigmoid(k * logit), and the
// gradient of that sum with respect to the weights and bias.
struct SoftCellSums {
  std::array<double, 4> count{};
  std::array<double, 4> rate_sum{};
  std::array<std::vector<double>, 4> grad_w;
  std::array<double, 4> grad_b{};
};

struct HardCellCounts {
  // predicted-positive and total rows per cell
  std::array<std::size_t, 4> positive{};
  std::array<std::size_t, 4> total{};
};

void compute_logits(std::span<const double> weights, double bias,
                    const Matrix& x, std::span<double> out);

// Fused logit + loss + gradient over the selected rows.
BceSums bce_sums_subset(std::span<const double> weights, double bias,
                        const Matrix& x, std::span<const std::uint8_t> y,
                        std::span<const std::size_t> rows);

// Loss + gradient over all rows from precomputed logits.
BceSums bce_sums_full(const Matrix& x, std::span<const std::uint8_t> y,
                      std::span<const double> logits);

SoftCellSums soft_cell_sums(const Matrix& x, std::span<const std::uint8_t> y,
                            std::span<const std::uint8_t> group,
                            std::span<const double> logits, double steepness);

HardCellCounts hard_cell_counts(std::span<const double> probabilities,
                                std::span<const std::uint8_t> y,
                                std::span<const std::uint8_t> group,
                                double threshold);

namespace serial {

void compute_logits(std::span<const double> weights, double bias,
                    const Matrix& x, std::span<double> out);
BceSums bce_sums_subset(std::span<const double> weights, double bias,
                        const Matrix& x, std::span<const std::uint8_t> y,
                        std::span<const std::size_t> rows);
BceSums bce_sums_full(const Matrix& x, std::span<const std::uint8_t> y,
                      std::span<const double> logits);
SoftCellSums soft_cell_sums(const Matrix& x, std::span<const std::uint8_t> y,
                            std::span<const std::uint8_t> group,
                            std::span<const double> logits, double steepness);
HardCellCounts hard_cell_counts(std::span<const double> probabilities,
                                std::span<const std::uint8_t> y,
                                std::span<const std::uint8_t> group,
                                double threshold);

}  // namespace serial

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int thread_count();

}  // namespace fairtune::kernels
