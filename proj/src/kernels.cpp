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

#include <algorithm>

#include "kernel_math.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fairtune::kernels {
namespace {

std::size_t block_count(std::size_t n) {
  return (n + kBlockRows - 1) / kBlockRows;
}

void add_into(std::vector<double>& acc, const std::vector<double>& part) {
  for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += part[j];
}

template <typename RowAt, typename LogitAt>
BceSums bce_blocked(const Matrix& x, std::span<const std::uint8_t> y,
                    std::size_t count, RowAt row_at, LogitAt logit_at) {
  const std::size_t d = x.cols();
  const std::size_t blocks = block_count(count);
  std::vector<BceSums> parts(blocks);
  const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    BceSums& part = parts[static_cast<std::size_t>(b)];
    part.grad_w.assign(d, 0.0);
    const std::size_t begin = static_cast<std::size_t>(b) * kBlockRows;
    const std::size_t end = std::min(count, begin + kBlockRows);
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t i = row_at(k);
      const auto row = x.row(i);
      const double p = detail::logistic(logit_at(k, row));
      part.loss += detail::bce_term(p, y[i]);
      const double r = p - static_cast<double>(y[i]);
      for (std::size_t j = 0; j < d; ++j) part.grad_w[j] += r * row[j];
      part.grad_b += r;
    }
    part.count = end - begin;
  }
  BceSums out;
  out.grad_w.assign(d, 0.0);
  for (const auto& part : parts) {
    out.loss += part.loss;
    add_into(out.grad_w, part.grad_w);
    out.grad_b += part.grad_b;
    out.count += part.count;
  }
  return out;
}

}  // namespace

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void compute_logits(std::span<const double> weights, double bias,
                    const Matrix& x, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        detail::dot(weights, x.row(static_cast<std::size_t>(i))) + bias;
  }
}

BceSums bce_sums_subset(std::span<const double> weights, double bias,
                        const Matrix& x, std::span<const std::uint8_t> y,
                        std::span<const std::size_t> rows) {
  return bce_blocked(
      x, y, rows.size(), [&](std::size_t k) { return rows[k]; },
      [&](std::size_t, std::span<const double> row) {
        return detail::dot(weights, row) + bias;
      });
}

BceSums bce_sums_full(const Matrix& x, std::span<const std::uint8_t> y,
                      std::span<const double> logits) {
  return bce_blocked(
      x, y, x.rows(), [](std::size_t k) { return k; },
      [&](std::size_t k, std::span<const double>) { return logits[k]; });
}

SoftCellSums soft_cell_sums(const Matrix& x, std::span<const std::uint8_t> y,
                            std::span<const std::uint8_t> group,
                            std::span<const double> logits, double steepness) {
  const std::size_t d = x.cols();
  const std::size_t n = x.rows();
  const std::size_t blocks = block_count(n);
  std::vector<SoftCellSums> parts(blocks);
  const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    SoftCellSums& part = parts[static_cast<std::size_t>(b)];
    for (auto& g : part.grad_w) g.assign(d, 0.0);
    const std::size_t begin = static_cast<std::size_t>(b) * kBlockRows;
    const std::size_t end = std::min(n, begin + kBlockRows);
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t c = cell_index(group[i], y[i]);
      const double s = detail::logistic(steepness * logits[i]);
      const double ds = steepness * s * (1.0 - s);
      part.count[c] += 1.0;
      part.rate_sum[c] += s;
      const auto row = x.row(i);
      auto& gw = part.grad_w[c];
      for (std::size_t j = 0; j < d; ++j) gw[j] += ds * row[j];
      part.grad_b[c] += ds;
    }
  }
  SoftCellSums out;
  for (auto& g : out.grad_w) g.assign(d, 0.0);
  for (const auto& part : parts) {
    for (std::size_t c = 0; c < 4; ++c) {
      out.count[c] += part.count[c];
      out.rate_sum[c] += part.rate_sum[c];
      add_into(out.grad_w[c], part.grad_w[c]);
      out.grad_b[c] += part.grad_b[c];
    }
  }
  return out;
}

HardCellCounts hard_cell_counts(std::span<const double> probabilities,
                                std::span<const std::uint8_t> y,
                                std::span<const std::uint8_t> group,
                                double threshold) {
  const std::size_t n = probabilities.size();
  const std::size_t blocks = block_count(n);
  std::vector<HardCellCounts> parts(blocks);
  const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    HardCellCounts& part = parts[static_cast<std::size_t>(b)];
    const std::size_t begin = static_cast<std::size_t>(b) * kBlockRows;
    const std::size_t end = std::min(n, begin + kBlockRows);
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t c = cell_index(group[i], y[i]);
      ++part.total[c];
      if (probabilities[i] >= threshold) ++part.positive[c];
    }
  }
  HardCellCounts out;
  for (const auto& part : parts) {
    for (std::size_t c = 0; c < 4; ++c) {
      out.positive[c] += part.positive[c];
      out.total[c] += part.total[c];
    }
  }
  return out;
}

}  // namespace fairtune::kernels
