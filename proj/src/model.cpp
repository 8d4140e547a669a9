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

#include "fairtune/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fairtune/error.hpp"
#include "fairtune/kernels.hpp"
#include "fairtune/rng.hpp"
#include "kernel_math.hpp"

namespace fairtune {

bool ModelParams::all_finite() const {
  return std::isfinite(bias) &&
         std::all_of(weights.begin(), weights.end(),
                     [](double w) { return std::isfinite(w); });
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in (0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
}

void TrainConfig::validate() const {
  adam().validate();
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (early_stop_window == 0) throw ConfigError("early_stop_window must be positive");
  if (!(early_stop_delta >= 0.0)) throw ConfigError("early_stop_delta must be non-negative");
  if (!(init_noise >= 0.0)) throw ConfigError("init_noise must be non-negative");
}

double sigmoid(double logit) { return detail::logistic(logit); }

Predictions predict_proba(const ModelParams& params, const Matrix& features) {
  if (features.cols() != params.dim()) {
    throw ConfigError("feature width " + std::to_string(features.cols()) +
                      " differs from model width " +
                      std::to_string(params.dim()));
  }
  Predictions out;
  out.logits.resize(features.rows());
  kernels::compute_logits(params.weights, params.bias, features, out.logits);
  out.probabilities.resize(features.rows());
  std::transform(out.logits.begin(), out.logits.end(),
                 out.probabilities.begin(), detail::logistic);
  return out;
}

namespace {

LossAndGrad normalize(kernels::BceSums sums) {
  const double m = static_cast<double>(sums.count);
  LossAndGrad out;
  out.loss = sums.loss / m;
  out.grad.weights = std::move(sums.grad_w);
  for (double& g : out.grad.weights) g /= m;
  out.grad.bias = sums.grad_b / m;
  return out;
}

void check_width(const ModelParams& params, const Dataset& data) {
  if (data.feature_count() != params.dim()) {
    throw ConfigError("dataset width " + std::to_string(data.feature_count()) +
                      " differs from model width " +
                      std::to_string(params.dim()));
  }
}

}  // namespace

LossAndGrad bce_loss_and_grad(const ModelParams& params, const Dataset& data,
                              std::span<const std::size_t> rows) {
  check_width(params, data);
  if (rows.empty()) throw ConfigError("bce over an empty row subset");
  for (std::size_t r : rows) {
    if (r >= data.rows()) throw ConfigError("row index out of range");
  }
  return normalize(kernels::bce_sums_subset(params.weights, params.bias,
                                            data.features(), data.labels(),
                                            rows));
}

LossAndGrad bce_loss_and_grad(const ModelParams& params, const Dataset& data) {
  check_width(params, data);
  std::vector<double> logits(data.rows());
  kernels::compute_logits(params.weights, params.bias, data.features(), logits);
  return normalize(
      kernels::bce_sums_full(data.features(), data.labels(), logits));
}

AdamUpdate adam_step(const ModelParams& params, const ModelParams& grad,
                     const AdamState& state, const AdamConfig& config) {
  const std::size_t d = params.dim();
  if (grad.dim() != d || state.first_moment.dim() != d ||
      state.second_moment.dim() != d) {
    throw ConfigError("adam_step shape mismatch");
  }
  if (!grad.all_finite()) throw NumericError("non-finite gradient entry");

  AdamUpdate out{params, state};
  out.state.step_count = state.step_count + 1;
  const double t = static_cast<double>(out.state.step_count);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  auto update = [&](double& theta, double& m, double& v, double g) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    theta -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  };
  for (std::size_t j = 0; j < d; ++j) {
    update(out.params.weights[j], out.state.first_moment.weights[j],
           out.state.second_moment.weights[j], grad.weights[j]);
  }
  update(out.params.bias, out.state.first_moment.bias,
         out.state.second_moment.bias, grad.bias);
  return out;
}

TrainResult train_performance(const Dataset& train, const TrainConfig& config) {
  config.validate();
  const std::size_t n = train.rows();
  const std::size_t d = train.feature_count();
  Rng rng(config.seed);

  ModelParams params = ModelParams::zeros(d);
  if (config.init_noise > 0.0) {
    for (double& w : params.weights) w = config.init_noise * rng.normal();
    params.bias = config.init_noise * rng.normal();
  }
  AdamState state = AdamState::zeros(d);
  const AdamConfig adam = config.adam();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.params = params;
  double best_loss = INFINITY;
  std::vector<double> best_by_epoch;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(n, begin + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      const LossAndGrad lg = bce_loss_and_grad(params, train, batch);
      AdamUpdate next = adam_step(params, lg.grad, state, adam);
      params = std::move(next.params);
      state = std::move(next.state);
    }
    const double loss = bce_loss_and_grad(params, train).loss;
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite training loss at epoch " +
                         std::to_string(epoch));
    }
    result.history.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      result.params = params;
      result.best_epoch = epoch;
    }
    best_by_epoch.push_back(best_loss);
    const std::size_t window = config.early_stop_window;
    if (best_by_epoch.size() > window) {
      const double earlier = best_by_epoch[best_by_epoch.size() - 1 - window];
      if (earlier - best_loss < config.early_stop_delta) break;
    }
  }
  return result;
}

std::string format_model(const ModelParams& params) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "bias %.17g\n", params.bias);
  os << buf;
  for (std::size_t j = 0; j < params.dim(); ++j) {
    std::snprintf(buf, sizeof buf, "w%zu %.17g\n", j, params.weights[j]);
    os << buf;
  }
  return os.str();
}

ModelParams parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string key;
  std::string value;
  ModelParams params;
  bool have_bias = false;
  std::size_t line = 0;
  while (in >> key) {
    ++line;
    if (!(in >> value)) throw DataError("model line " + std::to_string(line) + " has no value");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw DataError("model line " + std::to_string(line) + ": bad number '" + value + "'");
    }
    if (!have_bias) {
      if (key != "bias") throw DataError("model must start with a bias line");
      params.bias = v;
      have_bias = true;
      continue;
    }
    const std::string expected = "w" + std::to_string(params.dim());
    if (key != expected) {
      throw DataError("model line " + std::to_string(line) + ": expected '" +
                      expected + "', got '" + key + "'");
    }
    params.weights.push_back(v);
  }
  if (!have_bias) throw DataError("model has no bias line");
  if (params.weights.empty()) throw DataError("model has no weights");
  if (!params.all_finite()) throw DataError("model has non-finite entries");
  return params;
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << format_model(params);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace fairtune
