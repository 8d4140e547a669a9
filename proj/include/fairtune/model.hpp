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
#include <vector>

#include "fairtune/dataset.hpp"
#include "fairtune/matrix.hpp"

namespace fairtune {

// Weights and bias of a logistic model. The same shape carries gradients
// and Adam moments.
struct ModelParams {
  std::vector<double> weights;
  double bias = 0.0;

  static ModelParams zeros(std::size_t dim) { return {std::vector<double>(dim, 0.0), 0.0}; }
  std::size_t dim() const { return weights.size(); }
  bool all_finite() const;

  bool operator==(const ModelParams&) const = default;
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 1000;
  std::size_t max_epochs = 200;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t early_stop_window = 10;
  double early_stop_delta = 1e-6;
  std::uint64_t seed = 0;
  // Standard deviation of Gaussian noise added to the zero initialization.
  // Zero keeps the initial model deterministic regardless of seed.
  double init_noise = 0.0;

  AdamConfig adam() const {
    return {learning_rate, beta1, beta2, adam_epsilon};
  }
  void validate() const;
};

struct AdamState {
  ModelParams first_moment;
  ModelParams second_moment;
  std::uint64_t step_count = 0;

  static AdamState zeros(std::size_t dim) {
    return {ModelParams::zeros(dim), ModelParams::zeros(dim), 0};
  }
};

struct Predictions {
  std::vector<double> logits;
  std::vector<double> probabilities;
};

// Logistic function computed without overflow for any finite input.
double sigmoid(double logit);

Predictions predict_proba(const ModelParams& params, const Matrix& features);

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grad;
};

// Mean binary cross-entropy over `rows` and its gradient. Probabilities are
// clipped to [1e-12, 1 - 1e-12] inside the logarithms only.
LossAndGrad bce_loss_and_grad(const ModelParams& params, const Dataset& data,
                              std::span<const std::size_t> rows);
// Same over every row of `data`.
LossAndGrad bce_loss_and_grad(const ModelParams& params, const Dataset& data);

struct AdamUpdate {
  ModelParams params;
  AdamState state;
};

// One bias-corrected Adam update. Throws NumericError on non-finite input.
AdamUpdate adam_step(const ModelParams& params, const ModelParams& grad,
                     const AdamState& state, const AdamConfig& config);

struct TrainResult {
  ModelParams params;          // lowest full-train loss seen
  std::vector<double> history; // full-train loss after each epoch
  std::size_t best_epoch = 0;
};

// Minibatch Adam on binary cross-entropy starting from zero weights.
// Stops after max_epochs, or when the best loss has improved by less than
// early_stop_delta over the last early_stop_window epochs.
TrainResult train_performance(const Dataset& train, const TrainConfig& config);

// "bias <v>" then one "w<i> <v>" line per weight, 17 significant digits.
std::string format_model(const ModelParams& params);
ModelParams parse_model(const std::string& text);
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace fairtune
