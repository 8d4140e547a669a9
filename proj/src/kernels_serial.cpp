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

#include "fairtune/kernels.hpp"

#include "kernel_math.hpp"

namespace fairtune::kernels::serial {

void compute_logits(std::span<const double> weights, double bias,
                    const Matrix& x, std::span<double> out) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out[i] = detail::dot(weights, x.row(i)) + bias;
  }
}

BceSums bce_sums_subset(std::span<const double> weights, double bias,
                        const Matrix& x, std::span<const std::uint8_t> y,
                        std::span<const std::size_t> rows) {
  BceSums out;
  out.grad_w.assign(x.cols(), 0.0);
  for (std::size_t i : rows) {
    const auto row = x.row(i);
    const double p = detail::logistic(detail::dot(weights, row) + bias);
    out.loss += detail::bce_term(p, y[i]);
    const double r = p - static_cast<double>(y[i]);
    for (std::size_t j = 0; j < row.size(); ++j) out.grad_w[j] += r * row[j];
    out.grad_b += r;
  }
  out.count = rows.size();
  return out;
}

BceSums bce_sums_full(const Matrix& x, std::span<const std::uint8_t> y,
                      std::span<const double> logits) {
  BceSums out;
  out.grad_w.assign(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double p = detail::logistic(logits[i]);
    out.loss += detail::bce_term(p, y[i]);
    const double r = p - static_cast<double>(y[i]);
    for (std::size_t j = 0; j < row.size(); ++j) out.grad_w[j] += r * row[j];
    out.grad_b += r;
  }
  out.count = x.rows();
  return out;
}

SoftCellSums soft_cell_sums(const Matrix& x, std::span<const std::uint8_t> y,
                            std::span<const std::uint8_t> group,
                            std::span<const double> logits, double steepness) {
  SoftCellSums out;
  for (auto& g : out.grad_w) g.assign(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const std::size_t c = cell_index(group[i], y[i]);
    const double s = detail::logistic(steepness * logits[i]);
    const double ds = steepness * s * (1.0 - s);
    out.count[c] += 1.0;
    out.rate_sum[c] += s;
    const auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out.grad_w[c][j] += ds * row[j];
    out.grad_b[c] += ds;
  }
  return out;
}

HardCellCounts hard_cell_counts(std::span<const double> probabilities,
                                std::span<const std::uint8_t> y,
                                std::span<const std::uint8_t> group,
                                double threshold) {
  HardCellCounts out;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const std::size_t c = cell_index(group[i], y[i]);
    ++out.total[c];
    if (probabilities[i] >= threshold) ++out.positive[c];
  }
  return out;
}

}  // namespace fairtune::kernels::serial
