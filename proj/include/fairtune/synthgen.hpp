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
#include <string>
#include <string_view>
#include <vector>

#include "fairtune/dataset.hpp"

namespace fairtune {

struct SynthAttribute {
  std::string name;
  double marginal = 0.5;     // P(attribute = 1)
  double bias_shift = 0.0;   // added to the true logit of group 1
  double flip_rate_a = 0.0;  // label-flip probability in group 0
  double flip_rate_b = 0.0;  // label-flip probability in group 1
};

struct ProxyLoading {
  std::string attribute;
  double loading = 0.0;
};

// A feature column that leaks sensitive-attribute membership. The column
// stays standard normal: it mixes the attributes' latent Gaussians with
// independent noise, and it carries no weight in the true label model.
struct ProxyFeature {
  std::size_t feature = 0;
  std::vector<ProxyLoading> loadings;
};

struct SynthConfig {
  std::size_t n = 1000;
  std::size_t d = 5;
  std::vector<SynthAttribute> attributes;
  // Correlation between the first attribute's latent draw and every other.
  double attr_correlation = 0.0;
  double class_positive_rate = 0.2;
  // True weights are N(0, 1) * signal_scale / sqrt(d).
  double signal_scale = 1.0;
  std::vector<ProxyFeature> proxies;
  std::uint64_t seed = 0;

  void validate() const;
  const SynthAttribute& attribute(std::string_view name) const;
};

// Draws a biased dataset; see SynthConfig for the generative knobs.
// Throws DataError when the intercept cannot be calibrated to the target
// positive rate or when a (group, label) cell comes out empty.
Dataset generate(const SynthConfig& config);

// "sud-like" or "sepsis-like": cohort sizes, outcome rates and attribute
// marginals of two clinical cohorts, with injected disparity.
SynthConfig preset(std::string_view name);

std::vector<std::string> preset_names();

}  // namespace fairtune
