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

// Differentiable fairness objectives.
//
// Hard TPR/FPR count rows whose logit clears zero. Replacing that step with
// sigmoid(k * logit) yields soft rates that are smooth in the parameters;
// the per-attribute fairness loss is half the sum of the squared soft TPR
// and FPR gaps. Band penalties keep a metric near a reference value and
// are relaxed to a one-sided squared hinge for gradient steps.

#include <string>
#include <string_view>
#include <vector>

#include "fairtune/dataset.hpp"
#include "fairtune/metrics.hpp"
#include "fairtune/model.hpp"

namespace fairtune {

struct SoftRateConfig {
  double steepness = 5.0;
  void validate() const;
};

// 1 / (1 + exp(-k x)); k must be positive.
double soft_sigmoid(double x, double k);

GroupRates soft_group_rates(const ModelParams& params, const Dataset& data,
                            std::string_view attribute, double steepness);

// 1/2 (dTPR)^2 + 1/2 (dFPR)^2 over soft rates, with its analytic gradient.
LossAndGrad fairness_loss_and_grad(const ModelParams& params,
                                   const Dataset& data,
                                   std::string_view attribute,
                                   double steepness);

// Soft EOD, 1/2 (|dTPR| + |dFPR|), with its (sub)gradient.
LossAndGrad soft_eod_and_grad(const ModelParams& params, const Dataset& data,
                              std::string_view attribute, double steepness);

enum class PenaltyMetric { kPerformanceLoss, kAttributeEod };
enum class PenaltyDirection { kPenalizeIncrease, kPenalizeDecrease };

struct PenaltySpec {
  PenaltyMetric metric = PenaltyMetric::kPerformanceLoss;
  std::string attribute;  // set for kAttributeEod
  double reference = 0.0;
  double tolerance = 0.02;
  double weight = 1.0;
  PenaltyDirection direction = PenaltyDirection::kPenalizeIncrease;

  void validate() const;
  std::string term_name() const;
};

struct PenaltyValue {
  bool hard_in_band = false;  // reference - tol <= current <= reference + tol
  double relaxed = 0.0;       // weight * max(0, violation)^2
};

PenaltyValue penalty(const PenaltySpec& spec, double current);

// d relaxed / d current.
double penalty_slope(const PenaltySpec& spec, double current);

// True when `current` is not on the penalized side of the band.
bool within_tolerance(const PenaltySpec& spec, double current);

struct CompositeObjective {
  std::vector<std::string> fairness_attributes;
  std::vector<double> fairness_weights;  // empty means all 1.0
  std::vector<PenaltySpec> penalties;
  SoftRateConfig soft;

  void validate() const;
};

struct TermValue {
  std::string name;
  double value = 0.0;
};

struct CompositeValue {
  double total = 0.0;
  ModelParams grad;
  std::vector<TermValue> terms;  // contribution of each term to total
};

// Sum of weighted fairness losses and relaxed penalties. The performance
// penalty measures full-data BCE; attribute penalties measure soft EOD.
CompositeValue composite_loss_and_grad(const CompositeObjective& objective,
                                       const ModelParams& params,
                                       const Dataset& data);

}  // namespace fairtune
