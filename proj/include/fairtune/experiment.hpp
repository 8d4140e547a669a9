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

// Multi-seed experiment pipeline and report emission.
//
// One fixed stratified split, then for each repetition r a performance
// model trained with seed base + r, every scenario's fairness phase on top
// of it, and evaluation on both the training and the held-out rows.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairtune/config.hpp"
#include "fairtune/dataset.hpp"
#include "fairtune/error.hpp"
#include "fairtune/metrics.hpp"
#include "fairtune/model.hpp"
#include "fairtune/optimize.hpp"
#include "fairtune/synthgen.hpp"

namespace fairtune {

struct DataSource {
  enum class Kind { kSynth, kCsv };
  Kind kind = Kind::kSynth;
  std::string preset_name;  // informational for kSynth
  SynthConfig synth;
  std::filesystem::path csv_path;
  std::string label_column = "y";
  std::vector<std::string> sensitive_columns;
  bool standardize = false;
};

struct Scenario {
  enum class Kind { kNone, kSingle, kSequential, kSimultaneous };
  Kind kind = Kind::kNone;
  // kSingle: one name; kSequential: the order; kSimultaneous: empty means
  // every fairness attribute.
  std::vector<std::string> attributes;

  static Scenario parse(const std::string& text);
  std::string id() const;          // e.g. "sequential(race,sex)"
  std::string slug() const;        // filesystem-safe id
  std::string fair_method() const; // report column "Fair Method"
  std::string model_name() const;  // report column "Model"
};

enum class ReportFormat { kMarkdown, kCsv };

struct ExperimentConfig {
  DataSource data;
  SplitSpec split;
  TrainConfig train;
  FairnessSpec fairness;
  std::vector<Scenario> scenarios;
  std::size_t repetitions = 5;
  std::filesystem::path output_dir = "fairtune-out";
  ReportFormat format = ReportFormat::kMarkdown;
  bool write_traces = true;
  bool write_models = true;

  void validate() const;
};

// Reads every recognised key and rejects the rest.
ExperimentConfig parse_experiment_config(const KeyValueConfig& kv);

struct RepetitionResult {
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  MetricsReport train;
  MetricsReport test;
  std::vector<bool> found_fair;  // empty for the "none" scenario
  std::size_t steps = 0;
  ModelParams params;
  std::optional<OptimizationTrace> trace;
};

struct ScenarioResult {
  Scenario scenario;
  std::vector<RepetitionResult> repetitions;
  bool aborted = false;
  ErrorKind error_kind = ErrorKind::kConfig;
  std::string error;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one repetition
};

enum class Surface { kTrain, kTest };

struct RunReport {
  std::vector<std::string> attributes;
  std::size_t repetitions = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::vector<ScenarioResult> scenarios;

  bool any_aborted() const;
  const ScenarioResult& scenario(const std::string& id) const;
};

// Metric names: "auroc", "sensitivity", "specificity", "eod:<attr>",
// "dp_diff:<attr>", "eopp_diff:<attr>", "calibration_gap:<attr>".
double metric_value(const MetricsReport& report, const std::string& metric);
Summary summarize(const ScenarioResult& result, Surface surface,
                  const std::string& metric);

Dataset load_experiment_data(const DataSource& source);

RunReport run_experiment(const ExperimentConfig& config);

// Writes repetitions.csv plus report.md (markdown) or summary.csv (csv), and
// traces/ and models/ when enabled. Returns the paths written.
std::vector<std::filesystem::path> emit_report(const RunReport& report,
                                               const ExperimentConfig& config);

std::string render_markdown(const RunReport& report);
std::string render_repetitions_csv(const RunReport& report);
std::string render_summary_csv(const RunReport& report);

// "0.8613 ± 0.0021"
std::string format_mean_std(const Summary& s);

}  // namespace fairtune
