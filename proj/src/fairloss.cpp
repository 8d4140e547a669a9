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

#include "fairtune/fairloss.hpp"

#include <cmath>
#include <map>
#include <set>

#include "fairtune/error.hpp"
#include "fairtune/kernels.hpp"
#include "kernel_math.hpp"

namespace fairtune {
namespace {

// Soft rates of one attribute plus the gradient of each rate.
struct SoftRates {
  GroupRates rates;
  ModelParams d_tpr_a, d_fpr_a, d_tpr_b, d_fpr_b;
};

SoftRates soft_rates_from_logits(const Dataset& data, std::string_view attribute,
                                 std::span<const double> logits, double k) {
  const auto z = data.attribute(attribute);
  const auto sums =
      kernels::soft_cell_sums(data.features(), data.labels(), z, logits, k);
  auto cell = [&](std::uint8_t g, std::uint8_t y, double& rate, ModelParams& grad) {
    const std::size_t c = kernels::cell_index(g, y);
    const double n = sums.count[c];
    rate = sums.rate_sum[c] / n;
    grad.weights = sums.grad_w[c];
    for (double& w : grad.weights) w /= n;
    grad.bias = sums.grad_b[c] / n;
  };
  SoftRates out;
  out.rates.attribute = std::string(attribute);
  cell(0, 1, out.rates.tpr_a, out.d_tpr_a);
  cell(0, 0, out.rates.fpr_a, out.d_fpr_a);
  cell(1, 1, out.rates.tpr_b, out.d_tpr_b);
  cell(1, 0, out.rates.fpr_b, out.d_fpr_b);
  return out;
}

// out += scale * (a - b)
void axpy_diff(ModelParams& out, double scale, const ModelParams& a,
               const ModelParams& b) {
  for (std::size_t j = 0; j < out.dim(); ++j) {
    out.weights[j] += scale * (a.weights[j] - b.weights[j]);
  }
  out.bias += scale * (a.bias - b.bias);
}

void axpy(ModelParams& out, double scale, const ModelParams& a) {
  for (std::size_t j = 0; j < out.dim(); ++j) out.weights[j] += scale * a.weights[j];
  out.bias += scale * a.bias;
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

LossAndGrad fairness_from_rates(const SoftRates& s) {
  const double dt = s.rates.tpr_a - s.rates.tpr_b;
  const double df = s.rates.fpr_a - s.rates.fpr_b;
  LossAndGrad out{0.5 * dt * dt + 0.5 * df * df,
                  ModelParams::zeros(s.d_tpr_a.dim())};
  axpy_diff(out.grad, dt, s.d_tpr_a, s.d_tpr_b);
  axpy_diff(out.grad, df, s.d_fpr_a, s.d_fpr_b);
  return out;
}

LossAndGrad soft_eod_from_rates(const SoftRates& s) {
  const double dt = s.rates.tpr_a - s.rates.tpr_b;
  const double df = s.rates.fpr_a - s.rates.fpr_b;
  LossAndGrad out{0.5 * (std::abs(dt) + std::abs(df)),
                  ModelParams::zeros(s.d_tpr_a.dim())};
  axpy_diff(out.grad, 0.5 * sign(dt), s.d_tpr_a, s.d_tpr_b);
  axpy_diff(out.grad, 0.5 * sign(df), s.d_fpr_a, s.d_fpr_b);
  return out;
}

std::vector<double> logits_of(const ModelParams& params, const Dataset& data) {
  if (data.feature_count() != params.dim()) {
    throw ConfigError("dataset width differs from model width");
  }
  std::vector<double> logits(data.rows());
  kernels::compute_logits(params.weights, params.bias, data.features(), logits);
  return logits;
}

void check_steepness(double k) {
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw ConfigError("sigmoid steepness must be positive");
  }
}

}  // namespace

void SoftRateConfig::validate() const { check_steepness(steepness); }

double soft_sigmoid(double x, double k) {
  check_steepness(k);
  return detail::logistic(k * x);
}

GroupRates soft_group_rates(const ModelParams& params, const Dataset& data,
                            std::string_view attribute, double steepness) {
  check_steepness(steepness);
  data.attribute(attribute);
  const auto logits = logits_of(params, data);
  return soft_rates_from_logits(data, attribute, logits, steepness).rates;
}

LossAndGrad fairness_loss_and_grad(const ModelParams& params,
                                   const Dataset& data,
                                   std::string_view attribute,
                                   double steepness) {
  check_steepness(steepness);
  data.attribute(attribute);
  const auto logits = logits_of(params, data);
  return fairness_from_rates(
      soft_rates_from_logits(data, attribute, logits, steepness));
}

LossAndGrad soft_eod_and_grad(const ModelParams& params, const Dataset& data,
                              std::string_view attribute, double steepness) {
  check_steepness(steepness);
  data.attribute(attribute);
  const auto logits = logits_of(params, data);
  return soft_eod_from_rates(
      soft_rates_from_logits(data, attribute, logits, steepness));
}

void PenaltySpec::validate() const {
  if (!(tolerance >= 0.0)) throw ConfigError("penalty tolerance must be non-negative");
  if (!(weight >= 0.0)) throw ConfigError("penalty weight must be non-negative");
  if (!std::isfinite(reference)) throw ConfigError("penalty reference must be finite");
  if (metric == PenaltyMetric::kAttributeEod && attribute.empty()) {
    throw ConfigError("attribute penalty needs an attribute name");
  }
}

std::string PenaltySpec::term_name() const {
  return metric == PenaltyMetric::kPerformanceLoss ? std::string("pen_bce")
                                                   : "pen_eod_" + attribute;
}

namespace {

double violation(const PenaltySpec& spec, double current) {
  return spec.direction == PenaltyDirection::kPenalizeIncrease
             ? current - spec.reference - spec.tolerance
             : spec.reference - spec.tolerance - current;
}

}  // namespace

PenaltyValue penalty(const PenaltySpec& spec, double current) {
  const bool in_band = spec.reference - spec.tolerance <= current &&
                       current <= spec.reference + spec.tolerance;
  const double v = std::max(0.0, violation(spec, current));
  return {in_band, spec.weight * v * v};
}

double penalty_slope(const PenaltySpec& spec, double current) {
  const double v = violation(spec, current);
  if (v <= 0.0) return 0.0;
  const double dv = spec.direction == PenaltyDirection::kPenalizeIncrease ? 1.0 : -1.0;
  return 2.0 * spec.weight * v * dv;
}

bool within_tolerance(const PenaltySpec& spec, double current) {
  return violation(spec, current) <= 0.0;
}

void CompositeObjective::validate() const {
  soft.validate();
  std::set<std::string> seen;
  for (const auto& name : fairness_attributes) {
    if (!seen.insert(name).second) {
      throw ConfigError("duplicate fairness attribute '" + name + "'");
    }
  }
  if (!fairness_weights.empty() &&
      fairness_weights.size() != fairness_attributes.size()) {
    throw ConfigError("fairness weight count differs from attribute count");
  }
  for (double w : fairness_weights) {
    if (!(w >= 0.0)) throw ConfigError("fairness weights must be non-negative");
  }
  int performance = 0;
  for (const auto& p : penalties) {
    p.validate();
    performance += p.metric == PenaltyMetric::kPerformanceLoss;
  }
  if (performance > 1) throw ConfigError("at most one performance penalty");
}

CompositeValue composite_loss_and_grad(const CompositeObjective& objective,
                                       const ModelParams& params,
                                       const Dataset& data) {
  objective.validate();
  const double k = objective.soft.steepness;
  const auto logits = logits_of(params, data);

  std::map<std::string, SoftRates, std::less<>> cache;
  auto rates_for = [&](const std::string& name) -> const SoftRates& {
    auto it = cache.find(name);
    if (it == cache.end()) {
      it = cache.emplace(name, soft_rates_from_logits(data, name, logits, k)).first;
    }
    return it->second;
  };

  CompositeValue out;
  out.grad = ModelParams::zeros(params.dim());
  for (std::size_t i = 0; i < objective.fairness_attributes.size(); ++i) {
    const auto& name = objective.fairness_attributes[i];
    const double w = objective.fairness_weights.empty() ? 1.0 : objective.fairness_weights[i];
    const LossAndGrad term = fairness_from_rates(rates_for(name));
    out.total += w * term.loss;
    axpy(out.grad, w, term.grad);
    out.terms.push_back({"fair_" + name, w * term.loss});
  }
  for (const auto& spec : objective.penalties) {
    LossAndGrad metric;
    if (spec.metric == PenaltyMetric::kPerformanceLoss) {
      auto sums = kernels::bce_sums_full(data.features(), data.labels(), logits);
      const double m = static_cast<double>(sums.count);
      metric.loss = sums.loss / m;
      metric.grad.weights = std::move(sums.grad_w);
      for (double& g : metric.grad.weights) g /= m;
      metric.grad.bias = sums.grad_b / m;
    } else {
      metric = soft_eod_from_rates(rates_for(spec.attribute));
    }
    const PenaltyValue value = penalty(spec, metric.loss);
    out.total += value.relaxed;
    axpy(out.grad, penalty_slope(spec, metric.loss), metric.grad);
    out.terms.push_back({spec.term_name(), value.relaxed});
  }
  if (!std::isfinite(out.total) || !out.grad.all_finite()) {
    throw NumericError("non-finite composite objective");
  }
  return out;
}

}  // namespace fairtune
