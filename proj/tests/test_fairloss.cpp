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

#include <gtest/gtest.h>

#include <cmath>

#include "fairtune/error.hpp"
#include "fairtune/fairloss.hpp"
#include "test_support.hpp"

namespace fairtune {
namespace {

using testing::finite_difference;
using testing::flatten;
using testing::max_relative_error;

// One feature whose value is the logit under weight 1, bias 0.
Dataset logit_dataset(const std::vector<double>& logits, const std::vector<std::uint8_t>& y,
                      const std::vector<std::uint8_t>& z) {
  return Dataset(Matrix(logits.size(), 1, logits), y, {{"z", z}});
}
const ModelParams kIdentity{{1.0}, 0.0};

TEST(SoftSigmoid, ClosedForms) {
  EXPECT_EQ(soft_sigmoid(0.0, 3.0), 0.5);
  EXPECT_NEAR(soft_sigmoid(std::log(3.0), 1.0), 0.75, 1e-15);
  EXPECT_GE(soft_sigmoid(0.01, 1000.0), 0.999);
  EXPECT_EQ(soft_sigmoid(-1e6, 5.0), 0.0);
  EXPECT_EQ(soft_sigmoid(1e6, 5.0), 1.0);
  EXPECT_THROW(soft_sigmoid(1.0, 0.0), ConfigError);
}

TEST(SoftGroupRates, ZeroLogitsGiveOneHalf) {
  const Dataset data = logit_dataset({0, 0, 0, 0}, {0, 1, 0, 1}, {0, 0, 1, 1});
  const GroupRates r = soft_group_rates(kIdentity, data, "z", 5.0);
  EXPECT_EQ(r.tpr_a, 0.5);
  EXPECT_EQ(r.fpr_a, 0.5);
  EXPECT_EQ(r.tpr_b, 0.5);
  EXPECT_EQ(r.fpr_b, 0.5);
}

TEST(SoftGroupRates, ClosedFormPair) {
  // Group b positives at logits +-ln 3 with k = 1.
  const double l3 = std::log(3.0);
  const Dataset data = logit_dataset({0, 0, l3, -l3, 0}, {1, 0, 1, 1, 0}, {0, 0, 1, 1, 1});
  EXPECT_NEAR(soft_group_rates(kIdentity, data, "z", 1.0).tpr_b, 0.5, 1e-15);
  EXPECT_THROW(soft_group_rates(kIdentity, data, "age", 1.0), ConfigError);
}

TEST(FairnessLoss, ConstructedRates) {
  // tpr_a = 0.5, fpr_a = 0, tpr_b = 1, fpr_b = 0.5.
  const Dataset data = logit_dataset({0, -100, 100, 0}, {1, 0, 1, 0}, {0, 0, 1, 1});
  const LossAndGrad l = fairness_loss_and_grad(kIdentity, data, "z", 5.0);
  EXPECT_NEAR(l.loss, 0.25, 1e-12);
}

TEST(FairnessLoss, ZeroForMirroredGroupsAndInvariantUnderRelabel) {
  const std::vector<double> logits{0.3, -1.2, 2.0, -0.4, 0.3, -1.2, 2.0, -0.4};
  const std::vector<std::uint8_t> y{1, 0, 1, 0, 1, 0, 1, 0};
  const Dataset mirrored = logit_dataset(logits, y, {0, 0, 0, 0, 1, 1, 1, 1});
  const LossAndGrad zero = fairness_loss_and_grad(kIdentity, mirrored, "z", 5.0);
  EXPECT_NEAR(zero.loss, 0.0, 1e-15);

  Rng rng(4);
  const Dataset data = testing::random_dataset(rng, 60, 3, 1);
  std::vector<std::uint8_t> flipped;
  for (auto v : data.attribute("attr0")) flipped.push_back(1 - v);
  const Dataset relabeled(data.features(), {data.labels().begin(), data.labels().end()},
                          {{"attr0", flipped}});
  const ModelParams p = testing::random_params(rng, 3);
  EXPECT_NEAR(fairness_loss_and_grad(p, data, "attr0", 5.0).loss,
              fairness_loss_and_grad(p, relabeled, "attr0", 5.0).loss, 1e-15);
}

TEST(FairnessLoss, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const Dataset data = testing::random_dataset(rng, 30 + rng.below(120), 1 + rng.below(5), 1);
    const ModelParams p = testing::random_params(rng, data.feature_count(), 0.7);
    const double k = 0.5 + 5.0 * rng.uniform();
    const LossAndGrad l = fairness_loss_and_grad(p, data, "attr0", k);
    const auto fd = finite_difference(
        [&](const ModelParams& q) { return fairness_loss_and_grad(q, data, "attr0", k).loss; }, p);
    EXPECT_LT(max_relative_error(flatten(l.grad), fd), 1e-4) << "trial " << trial;
  }
}

TEST(SoftEod, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    const Dataset data = testing::random_dataset(rng, 40 + rng.below(100), 1 + rng.below(4), 1);
    const ModelParams p = testing::random_params(rng, data.feature_count(), 0.7);
    const LossAndGrad l = soft_eod_and_grad(p, data, "attr0", 5.0);
    const GroupRates r = soft_group_rates(p, data, "attr0", 5.0);
    EXPECT_NEAR(l.loss, 0.5 * (std::abs(r.tpr_a - r.tpr_b) + std::abs(r.fpr_a - r.fpr_b)),
                1e-15);
    const auto fd = finite_difference(
        [&](const ModelParams& q) { return soft_eod_and_grad(q, data, "attr0", 5.0).loss; }, p);
    EXPECT_LT(max_relative_error(flatten(l.grad), fd), 1e-4) << "trial " << trial;
  }
}

TEST(SoftRates, ApproachHardRatesForSteepSigmoid) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50 + rng.below(200);
    std::vector<double> logits(n);
    std::vector<std::uint8_t> y(n);
    std::vector<std::uint8_t> z(n);
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.01 + std::abs(rng.normal()));
      y[i] = rng.uniform() < 0.5 ? 1 : 0;
      z[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    for (std::size_t c = 0; c < 4; ++c) {
      y[c] = c & 1;
      z[c] = static_cast<std::uint8_t>(c >> 1);
    }
    const Dataset data = logit_dataset(logits, y, z);
    std::vector<double> probs;
    for (double l : logits) probs.push_back(testing::naive_sigmoid(l));
    const auto hard = testing::brute_rates(probs, y, z, 0.5);
    const GroupRates soft = soft_group_rates(kIdentity, data, "z", 1000.0);
    EXPECT_LE(std::abs(soft.tpr_a - hard.tpr_a), 1e-3);
    EXPECT_LE(std::abs(soft.fpr_a - hard.fpr_a), 1e-3);
    EXPECT_LE(std::abs(soft.tpr_b - hard.tpr_b), 1e-3);
    EXPECT_LE(std::abs(soft.fpr_b - hard.fpr_b), 1e-3);
    EXPECT_LE(std::abs(soft_eod_and_grad(kIdentity, data, "z", 1000.0).loss - hard.eod()), 2e-3);
  }
}

TEST(Penalty, BandAndHinge) {
  PenaltySpec spec;
  spec.reference = 0.05;
  spec.tolerance = 0.02;
  PenaltyValue v = penalty(spec, 0.05);
  EXPECT_TRUE(v.hard_in_band);
  EXPECT_EQ(v.relaxed, 0.0);

  v = penalty(spec, 0.10);
  EXPECT_FALSE(v.hard_in_band);
  EXPECT_NEAR(v.relaxed, 9e-4, 1e-15);

  v = penalty(spec, 0.05 - 1.0);
  EXPECT_FALSE(v.hard_in_band);
  EXPECT_EQ(v.relaxed, 0.0);
  EXPECT_TRUE(within_tolerance(spec, -0.95));

  spec.direction = PenaltyDirection::kPenalizeDecrease;
  EXPECT_EQ(penalty(spec, 0.10).relaxed, 0.0);
  EXPECT_NEAR(penalty(spec, 0.0).relaxed, 0.03 * 0.03 - 0.0, 1e-15);
  EXPECT_NEAR(penalty_slope(spec, 0.0), -2.0 * 0.03, 1e-15);

  spec.tolerance = -0.1;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Penalty, RelaxedIsZeroInsideBand) {
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    PenaltySpec spec;
    spec.reference = rng.normal();
    spec.tolerance = rng.uniform() * 0.1;
    spec.weight = rng.uniform() * 3.0;
    spec.direction = rng.uniform() < 0.5 ? PenaltyDirection::kPenalizeIncrease
                                         : PenaltyDirection::kPenalizeDecrease;
    const double current = spec.reference + rng.normal() * 0.1;
    const PenaltyValue v = penalty(spec, current);
    if (v.hard_in_band) {
      EXPECT_EQ(v.relaxed, 0.0);
    }
    EXPECT_GE(v.relaxed, 0.0);
  }
}

TEST(Composite, EmptyObjectiveOnSymmetricDataIsZero) {
  const std::vector<double> logits{0.3, -1.2, 0.3, -1.2};
  const Dataset data = logit_dataset(logits, {1, 0, 1, 0}, {0, 0, 1, 1});
  CompositeObjective obj;
  obj.fairness_attributes = {"z"};
  const CompositeValue v = composite_loss_and_grad(obj, kIdentity, data);
  EXPECT_NEAR(v.total, 0.0, 1e-15);
  for (double g : flatten(v.grad)) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(Composite, Additivity) {
  const Dataset data = logit_dataset({0, -100, 100, 0}, {1, 0, 1, 0}, {0, 0, 1, 1});
  const double bce = bce_loss_and_grad(kIdentity, data).loss;
  CompositeObjective obj;
  obj.fairness_attributes = {"z"};
  PenaltySpec perf;
  perf.reference = bce - 0.05;
  perf.tolerance = 0.02;
  obj.penalties = {perf};
  const CompositeValue v = composite_loss_and_grad(obj, kIdentity, data);
  EXPECT_NEAR(v.total, 0.2509, 1e-9);
  ASSERT_EQ(v.terms.size(), 2u);
  EXPECT_EQ(v.terms[0].name, "fair_z");
  EXPECT_EQ(v.terms[1].name, "pen_bce");
  EXPECT_NEAR(v.terms[1].value, 9e-4, 1e-12);
}

TEST(Composite, GradientMatchesFiniteDifferences) {
  Rng rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    const Dataset data = testing::random_dataset(rng, 40 + rng.below(120), 1 + rng.below(4), 2);
    const ModelParams p = testing::random_params(rng, data.feature_count(), 0.7);
    CompositeObjective obj;
    obj.soft.steepness = 1.0 + 4.0 * rng.uniform();
    obj.fairness_attributes = {"attr0", "attr1"};
    obj.fairness_weights = {1.0, 0.5 + rng.uniform()};
    PenaltySpec perf;
    perf.reference = bce_loss_and_grad(p, data).loss - 0.1;
    perf.weight = 2.0;
    PenaltySpec band;
    band.metric = PenaltyMetric::kAttributeEod;
    band.attribute = "attr0";
    band.reference = 0.0;
    band.tolerance = 0.0;
    obj.penalties = {perf, band};
    const CompositeValue v = composite_loss_and_grad(obj, p, data);
    const auto fd = finite_difference(
        [&](const ModelParams& q) { return composite_loss_and_grad(obj, q, data).total; }, p);
    EXPECT_LT(max_relative_error(flatten(v.grad), fd), 1e-4) << "trial " << trial;
  }
}

TEST(Composite, ValidationRejectsBadObjectives) {
  CompositeObjective obj;
  obj.fairness_attributes = {"a", "a"};
  EXPECT_THROW(obj.validate(), ConfigError);
  obj.fairness_attributes = {"a"};
  obj.penalties = {PenaltySpec{}, PenaltySpec{}};
  EXPECT_THROW(obj.validate(), ConfigError);
}

}  // namespace
}  // namespace fairtune
