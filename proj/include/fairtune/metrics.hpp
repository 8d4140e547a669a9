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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairtune/dataset.hpp"

namespace fairtune {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// TPR/FPR of both groups of one attribute; group a is value 0, b value 1.
// Used for hard (thresholded) and soft (sigmoid-relaxed) rates alike.
struct GroupRates {
  std::string attribute;
  double tpr_a = 0.0;
  double fpr_a = 0.0;
  double tpr_b = 0.0;
  double fpr_b = 0.0;
};

// Prediction is positive iff probability >= threshold.
GroupRates group_rates(std::span<const double> probabilities,
                       const Dataset& data, std::string_view attribute,
                       double threshold);

// Equalized-odds disparity: mean of the absolute TPR and FPR gaps.
double eod(const GroupRates& rates);

// Mann-Whitney estimate of the area under the ROC curve; ties score 1/2.
// Throws MetricError unless both classes are present.
double auroc(std::span<const double> scores,
             std::span<const std::uint8_t> labels);

struct ClassificationMetrics {
  double sensitivity = 0.0;
  double specificity = 0.0;
  ConfusionCounts counts;
};

ClassificationMetrics classification_metrics(
    std::span<const double> probabilities, std::span<const std::uint8_t> labels,
    double threshold);

struct AuxFairness {
  double dp_diff = 0.0;          // |P(Yhat=1|a) - P(Yhat=1|b)|
  double eopp_diff = 0.0;        // |tpr_a - tpr_b|
  double calibration_gap = 0.0;  // max per-bin |mean(Y|bin,a) - mean(Y|bin,b)|
};

// Calibration uses `bins` equal-width probability bins and skips any bin
// holding fewer than 10 rows of either group.
AuxFairness aux_fairness_metrics(std::span<const double> probabilities,
                                 const Dataset& data,
                                 std::string_view attribute, double threshold,
                                 std::size_t bins);

struct AttributeMetrics {
  std::string attribute;
  double eod = 0.0;
  double dp_diff = 0.0;
  double eopp_diff = 0.0;
  double calibration_gap = 0.0;
};

struct MetricsReport {
  double auroc = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  std::vector<AttributeMetrics> attributes;  // in requested order

  const AttributeMetrics& at(std::string_view attribute) const;
};

inline constexpr std::size_t kCalibrationBins = 10;

// All of the above for the given attributes.
MetricsReport evaluate_probabilities(std::span<const double> probabilities,
                                     const Dataset& data,
                                     std::span<const std::string> attributes,
                                     double threshold);

}  // namespace fairtune
