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

#include "fairtune/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <set>

#include "fairtune/error.hpp"

namespace fairtune {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct StepEval {
  std::vector<double> eods;
  double bce = 0.0;
};

StepEval evaluate_step(const ModelParams& params, const Dataset& train,
                       const FairnessSpec& spec) {
  StepEval ev;
  ev.eods = hard_eods(params, train, spec.attributes, spec.classification_threshold);
  ev.bce = bce_loss_and_grad(params, train).loss;
  if (!std::isfinite(ev.bce)) throw NumericError("non-finite training loss");
  return ev;
}

PenaltySpec performance_band(const ModelParams& start, const Dataset& train,
                             const FairnessSpec& spec) {
  PenaltySpec p;
  p.metric = PenaltyMetric::kPerformanceLoss;
  p.reference = bce_loss_and_grad(start, train).loss;
  p.tolerance = spec.tolerance;
  p.weight = spec.performance_weight;
  return p;
}

AdamConfig fairness_adam(const FairnessSpec& spec) {
  AdamConfig adam;
  adam.learning_rate = spec.learning_rate;
  return adam;
}

FairModelResult identity_result(const ModelParams& start,
                                const FairnessSpec& spec, Strategy strategy) {
  FairModelResult r;
  r.params = start;
  r.strategy = strategy;
  r.attribute_order = spec.attributes;
  r.trace.attributes = spec.attributes;
  return r;
}

}  // namespace

double FairnessSpec::threshold(std::string_view attribute) const {
  const auto it = thresholds.find(attribute);
  return it == thresholds.end() ? default_threshold : it->second;
}

void FairnessSpec::validate(const Dataset& data) const {
  std::set<std::string> seen;
  for (const auto& name : attributes) {
    if (!seen.insert(name).second) {
      throw ConfigError("fairness attribute '" + name + "' listed twice");
    }
    if (!data.has_attribute(name)) {
      throw ConfigError("fairness attribute '" + name + "' not in dataset");
    }
    const double z = threshold(name);
    if (!(z > 0.0 && z <= 1.0)) {
      throw ConfigError("EOD threshold of '" + name + "' must lie in (0,1]");
    }
  }
  if (!(default_threshold > 0.0 && default_threshold <= 1.0)) {
    throw ConfigError("default EOD threshold must lie in (0,1]");
  }
  if (step_budget == 0) throw ConfigError("step_budget must be positive");
  if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
  if (!(steepness > 0.0)) throw ConfigError("steepness must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("fairness learning rate must be positive");
  if (!(performance_weight >= 0.0) || !(fairness_penalty_weight >= 0.0)) {
    throw ConfigError("penalty weights must be non-negative");
  }
  if (!(classification_threshold > 0.0 && classification_threshold < 1.0)) {
    throw ConfigError("classification threshold must lie in (0,1)");
  }
}

std::vector<double> hard_eods(const ModelParams& params, const Dataset& data,
                              std::span<const std::string> attributes,
                              double threshold) {
  const Predictions pred = predict_proba(params, data.features());
  std::vector<double> out;
  for (const auto& name : attributes) {
    out.push_back(eod(group_rates(pred.probabilities, data, name, threshold)));
  }
  return out;
}

FairModelResult optimize_sequential(const ModelParams& performance_model,
                                    const Dataset& train,
                                    const FairnessSpec& spec) {
  spec.validate(train);
  FairModelResult result =
      identity_result(performance_model, spec, Strategy::kSequential);
  if (spec.attributes.empty()) return result;

  const std::size_t n_attr = spec.attributes.size();
  result.found_fair.assign(n_attr, false);
  const AdamConfig adam = fairness_adam(spec);

  CompositeObjective objective;
  objective.soft.steepness = spec.steepness;
  objective.penalties.push_back(performance_band(performance_model, train, spec));

  ModelParams current = performance_model;
  std::size_t global_step = 0;
  for (std::size_t i = 0; i < n_attr; ++i) {
    const std::string& attr = spec.attributes[i];
    const double zeta = spec.threshold(attr);
    objective.fairness_attributes = {attr};

    ModelParams theta = current;
    AdamState state = AdamState::zeros(theta.dim());
    CompositeValue value = composite_loss_and_grad(objective, theta, train);
    double min_eod = kInf;
    std::optional<ModelParams> snapshot;
    // Fallback when no step meets the threshold: the lowest-loss iterate
    // that still honors every band, starting from the phase's own start.
    double best_loss = value.total;
    ModelParams best_loss_params = current;

    for (std::size_t t = 0; t < spec.step_budget; ++t) {
      AdamUpdate next = adam_step(theta, value.grad, state, adam);
      theta = std::move(next.params);
      state = std::move(next.state);
      value = composite_loss_and_grad(objective, theta, train);
      const StepEval ev = evaluate_step(theta, train, spec);

      // Bands of everything optimized so far must hold at acceptance, and an
      // attribute that reached its threshold must stay below it.
      bool guards = true;
      for (const auto& band : objective.penalties) {
        if (band.metric == PenaltyMetric::kPerformanceLoss) {
          guards = guards && within_tolerance(band, ev.bce);
        }
      }
      for (std::size_t j = 0; j < i; ++j) {
        const auto& band = objective.penalties[j + 1];
        guards = guards && within_tolerance(band, ev.eods[j]);
        if (result.found_fair[j]) {
          guards = guards && ev.eods[j] <= spec.threshold(spec.attributes[j]);
        }
      }
      if (guards && value.total < best_loss) {
        best_loss = value.total;
        best_loss_params = theta;
      }
      const double eod_i = ev.eods[i];
      const bool accepted = guards && eod_i <= zeta && eod_i < min_eod;
      if (accepted) {
        min_eod = eod_i;
        snapshot = theta;
      }
      result.trace.steps.push_back({global_step++, i, value.total, value.terms,
                                    ev.eods, ev.bce, accepted});
      if (eod_i >= zeta && snapshot) break;
    }

    if (snapshot) {
      current = std::move(*snapshot);
      result.found_fair[i] = true;
    } else {
      current = std::move(best_loss_params);
    }
    PenaltySpec band;
    band.metric = PenaltyMetric::kAttributeEod;
    band.attribute = attr;
    band.reference = hard_eods(current, train, std::span(&attr, 1),
                               spec.classification_threshold)[0];
    band.tolerance = spec.tolerance;
    band.weight = spec.fairness_penalty_weight;
    objective.penalties.push_back(band);
  }

  result.params = std::move(current);
  result.recorded_eods = hard_eods(result.params, train, spec.attributes,
                                   spec.classification_threshold);
  for (std::size_t i = 0; i < n_attr; ++i) {
    result.found_fair[i] = result.found_fair[i] &&
                           result.recorded_eods[i] <= spec.threshold(spec.attributes[i]);
  }
  return result;
}

FairModelResult optimize_simultaneous(const ModelParams& performance_model,
                                      const Dataset& train,
                                      const FairnessSpec& spec) {
  spec.validate(train);
  FairModelResult result =
      identity_result(performance_model, spec, Strategy::kSimultaneous);
  if (spec.attributes.empty()) return result;

  const std::size_t n_attr = spec.attributes.size();
  CompositeObjective objective;
  objective.soft.steepness = spec.steepness;
  objective.fairness_attributes = spec.attributes;
  const PenaltySpec perf = performance_band(performance_model, train, spec);
  objective.penalties.push_back(perf);
  const AdamConfig adam = fairness_adam(spec);

  ModelParams theta = performance_model;
  AdamState state = AdamState::zeros(theta.dim());
  CompositeValue value = composite_loss_and_grad(objective, theta, train);
  double min_total = kInf;
  std::optional<ModelParams> snapshot;

  for (std::size_t t = 0; t < spec.step_budget; ++t) {
    AdamUpdate next = adam_step(theta, value.grad, state, adam);
    theta = std::move(next.params);
    state = std::move(next.state);
    value = composite_loss_and_grad(objective, theta, train);
    const StepEval ev = evaluate_step(theta, train, spec);

    double eod_total = 0.0;
    bool fair_all = true;
    for (std::size_t i = 0; i < n_attr; ++i) {
      eod_total += ev.eods[i];
      if (ev.eods[i] > spec.threshold(spec.attributes[i])) fair_all = false;
    }
    const bool accepted =
        fair_all && eod_total < min_total && within_tolerance(perf, ev.bce);
    if (accepted) {
      min_total = eod_total;
      snapshot = theta;
    }
    result.trace.steps.push_back(
        {t, 0, value.total, value.terms, ev.eods, ev.bce, accepted});
    // A fair snapshot has replaced the starting model and fairness is lost.
    if (!fair_all && snapshot) break;
  }

  result.found_fair.assign(n_attr, snapshot.has_value());
  if (snapshot) result.params = std::move(*snapshot);
  result.recorded_eods = hard_eods(result.params, train, spec.attributes,
                                   spec.classification_threshold);
  return result;
}

MetricsReport evaluate_model(const ModelParams& params, const Dataset& data,
                             std::span<const std::string> attributes,
                             double threshold) {
  const Predictions pred = predict_proba(params, data.features());
  return evaluate_probabilities(pred.probabilities, data, attributes, threshold);
}

const char* to_string(Strategy strategy) {
  return strategy == Strategy::kSequential ? "sequential" : "simultaneous";
}

void OptimizationTrace::write_csv(std::ostream& out) const {
  std::vector<std::string> term_names;
  for (const auto& s : steps) {
    for (const auto& term : s.terms) {
      if (std::find(term_names.begin(), term_names.end(), term.name) ==
          term_names.end()) {
        term_names.push_back(term.name);
      }
    }
  }
  out << "step,phase,total_loss";
  for (const auto& name : term_names) out << ',' << name;
  for (const auto& attr : attributes) out << ",eod_" << attr;
  out << ",bce,accepted\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (const auto& s : steps) {
    out << s.step << ',' << s.phase << ',' << num(s.total_loss);
    for (const auto& name : term_names) {
      out << ',';
      for (const auto& term : s.terms) {
        if (term.name == name) out << num(term.value);
      }
    }
    for (double e : s.eods) out << ',' << num(e);
    out << ',' << num(s.bce) << ',' << (s.accepted ? 1 : 0) << '\n';
  }
}

}  // namespace fairtune
