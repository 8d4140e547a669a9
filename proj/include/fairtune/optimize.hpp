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
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fairtune/dataset.hpp"
#include "fairtune/fairloss.hpp"
#include "fairtune/metrics.hpp"
#include "fairtune/model.hpp"

namespace fairtune {

struct FairnessSpec {
  // Optimization order for the sequential strategy.
  std::vector<std::string> attributes;
  // Per-attribute EOD thresholds; missing names use default_threshold.
  std::map<std::string, double, std::less<>> thresholds;
  double default_threshold = 0.05;
  std::size_t step_budget = 1000;
  double tolerance = 0.02;
  double steepness = 5.0;
  double learning_rate = 0.001;
  double performance_weight = 1.0;       // weight of the BCE band penalty
  double fairness_penalty_weight = 1.0;  // weight of earlier-attribute bands
  double classification_threshold = 0.5;

  double threshold(std::string_view attribute) const;
  void validate(const Dataset& data) const;
};

struct TraceStep {
  std::size_t step = 0;   // global across phases, strictly increasing
  std::size_t phase = 0;  // sequential: attribute index; simultaneous: 0
  double total_loss = 0.0;
  std::vector<TermValue> terms;
  std::vector<double> eods;  // hard training EOD per spec attribute
  double bce = 0.0;
  bool accepted = false;
};

struct OptimizationTrace {
  std::vector<std::string> attributes;
  std::vector<TraceStep> steps;

  // step,phase,total_loss,<terms...>,eod_<attr>...,bce,accepted
  void write_csv(std::ostream& out) const;
};

enum class Strategy { kSequential, kSimultaneous };

struct FairModelResult {
  ModelParams params;
  Strategy strategy = Strategy::kSequential;
  std::vector<std::string> attribute_order;
  std::vector<bool> found_fair;       // per attribute_order entry
  std::vector<double> recorded_eods;  // hard training EOD of params
  OptimizationTrace trace;
};

// One fairness phase per attribute, in spec order. Each phase minimizes the
// attribute's fairness loss plus the BCE band and the EOD bands of every
// attribute already handled, and keeps the lowest-EOD iterate that meets
// the threshold and all bands.
FairModelResult optimize_sequential(const ModelParams& performance_model,
                                    const Dataset& train,
                                    const FairnessSpec& spec);

// A single phase minimizing the sum of all fairness losses plus the BCE
// band; keeps the iterate with the lowest summed EOD among those where
// every attribute meets its threshold.
FairModelResult optimize_simultaneous(const ModelParams& performance_model,
                                      const Dataset& train,
                                      const FairnessSpec& spec);

MetricsReport evaluate_model(const ModelParams& params, const Dataset& data,
                             std::span<const std::string> attributes,
                             double threshold);

// Hard EOD of `params` on `data` for each attribute.
std::vector<double> hard_eods(const ModelParams& params, const Dataset& data,
                              std::span<const std::string> attributes,
                              double threshold);

const char* to_string(Strategy strategy);

}  // namespace fairtune
