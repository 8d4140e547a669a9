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

#include "fairtune/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairtune/error.hpp"
#include "fairtune/kernels.hpp"

namespace fairtune {
namespace {

void check_length(std::span<const double> probabilities, const Dataset& data) {
  if (probabilities.size() != data.rows()) {
    throw ConfigError("prediction count differs from dataset rows");
  }
}

double ratio(std::size_t num, std::size_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

GroupRates group_rates(std::span<const double> probabilities,
                       const Dataset& data, std::string_view attribute,
                       double threshold) {
  const auto z = data.attribute(attribute);
  check_length(probabilities, data);
  const auto counts =
      kernels::hard_cell_counts(probabilities, data.labels(), z, threshold);
  using kernels::cell_index;
  auto rate = [&](std::uint8_t g, std::uint8_t y) {
    const std::size_t c = cell_index(g, y);
    return ratio(counts.positive[c], counts.total[c]);
  };
  return {std::string(attribute), rate(0, 1), rate(0, 0), rate(1, 1),
          rate(1, 0)};
}

double eod(const GroupRates& r) {
  return 0.5 * (std::abs(r.tpr_a - r.tpr_b) + std::abs(r.fpr_a - r.fpr_b));
}

double auroc(std::span<const double> scores,
             std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ConfigError("score count differs from label count");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Walk tie groups in ascending score order. Each positive earns one for
  // every negative strictly below it and one half for every tied negative.
  double concordant = 0.0;
  std::size_t negatives_below = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t tie_pos = 0;
    std::size_t tie_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]]) ++tie_pos; else ++tie_neg;
      ++j;
    }
    concordant += static_cast<double>(tie_pos) *
                  (static_cast<double>(negatives_below) + 0.5 * static_cast<double>(tie_neg));
    negatives_below += tie_neg;
    positives += tie_pos;
    negatives += tie_neg;
    i = j;
  }
  if (positives == 0 || negatives == 0) {
    throw MetricError("AUROC needs both positive and negative labels");
  }
  return concordant /
         (static_cast<double>(positives) * static_cast<double>(negatives));
}

ClassificationMetrics classification_metrics(
    std::span<const double> probabilities, std::span<const std::uint8_t> labels,
    double threshold) {
  if (probabilities.size() != labels.size()) {
    throw ConfigError("prediction count differs from label count");
  }
  ClassificationMetrics out;
  auto& c = out.counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    if (labels[i]) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0) {
    throw MetricError("sensitivity/specificity need both classes");
  }
  out.sensitivity = ratio(c.tp, c.tp + c.fn);
  out.specificity = ratio(c.tn, c.tn + c.fp);
  return out;
}

AuxFairness aux_fairness_metrics(std::span<const double> probabilities,
                                 const Dataset& data,
                                 std::string_view attribute, double threshold,
                                 std::size_t bins) {
  const auto z = data.attribute(attribute);
  check_length(probabilities, data);
  if (bins == 0) throw ConfigError("calibration needs at least one bin");
  const auto y = data.labels();

  std::size_t predicted[2] = {0, 0};
  std::size_t members[2] = {0, 0};
  std::vector<std::size_t> bin_count[2] = {std::vector<std::size_t>(bins, 0),
                                           std::vector<std::size_t>(bins, 0)};
  std::vector<std::size_t> bin_pos[2] = {std::vector<std::size_t>(bins, 0),
                                         std::vector<std::size_t>(bins, 0)};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const int g = z[i];
    ++members[g];
    if (probabilities[i] >= threshold) ++predicted[g];
    const double p = std::clamp(probabilities[i], 0.0, 1.0);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(p * static_cast<double>(bins)));
    ++bin_count[g][b];
    bin_pos[g][b] += y[i];
  }

  AuxFairness out;
  out.dp_diff = std::abs(ratio(predicted[0], members[0]) -
                         ratio(predicted[1], members[1]));
  const GroupRates rates = group_rates(probabilities, data, attribute, threshold);
  out.eopp_diff = std::abs(rates.tpr_a - rates.tpr_b);
  for (std::size_t b = 0; b < bins; ++b) {
    if (bin_count[0][b] < 10 || bin_count[1][b] < 10) continue;
    const double gap = std::abs(ratio(bin_pos[0][b], bin_count[0][b]) -
                                ratio(bin_pos[1][b], bin_count[1][b]));
    out.calibration_gap = std::max(out.calibration_gap, gap);
  }
  return out;
}

const AttributeMetrics& MetricsReport::at(std::string_view attribute) const {
  for (const auto& a : attributes) {
    if (a.attribute == attribute) return a;
  }
  throw ConfigError("report has no attribute '" + std::string(attribute) + "'");
}

MetricsReport evaluate_probabilities(std::span<const double> probabilities,
                                     const Dataset& data,
                                     std::span<const std::string> attributes,
                                     double threshold) {
  check_length(probabilities, data);
  MetricsReport report;
  report.auroc = auroc(probabilities, data.labels());
  const auto cls = classification_metrics(probabilities, data.labels(), threshold);
  report.sensitivity = cls.sensitivity;
  report.specificity = cls.specificity;
  for (const auto& name : attributes) {
    const GroupRates rates = group_rates(probabilities, data, name, threshold);
    const AuxFairness aux = aux_fairness_metrics(probabilities, data, name,
                                                 threshold, kCalibrationBins);
    report.attributes.push_back(
        {name, eod(rates), aux.dp_diff, aux.eopp_diff, aux.calibration_gap});
  }
  return report;
}

}  // namespace fairtune
