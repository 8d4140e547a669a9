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

#include "fairtune/synthgen.hpp"

#include <cmath>
#include <set>

#include "fairtune/error.hpp"
#include "fairtune/rng.hpp"
#include "kernel_math.hpp"

namespace fairtune {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Correlation of latent draws a and b under the shared-factor construction.
double latent_correlation(std::size_t a, std::size_t b, double rho) {
  if (a == b) return 1.0;
  if (a == 0 || b == 0) return rho;
  return rho * rho;
}

double proxy_variance(const SynthConfig& config, const ProxyFeature& proxy,
                      const std::vector<std::size_t>& attr_index) {
  double var = 0.0;
  for (std::size_t i = 0; i < proxy.loadings.size(); ++i) {
    for (std::size_t j = 0; j < proxy.loadings.size(); ++j) {
      var += proxy.loadings[i].loading * proxy.loadings[j].loading *
             latent_correlation(attr_index[i], attr_index[j],
                                config.attr_correlation);
    }
  }
  return var;
}

std::vector<std::size_t> loading_indices(const SynthConfig& config,
                                         const ProxyFeature& proxy) {
  std::vector<std::size_t> out;
  for (const auto& l : proxy.loadings) {
    std::size_t found = config.attributes.size();
    for (std::size_t a = 0; a < config.attributes.size(); ++a) {
      if (config.attributes[a].name == l.attribute) found = a;
    }
    if (found == config.attributes.size()) {
      throw ConfigError("proxy loading names unknown attribute '" + l.attribute + "'");
    }
    out.push_back(found);
  }
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  if (n < 100) throw ConfigError("synthetic n must be at least 100");
  if (d < 1) throw ConfigError("synthetic d must be at least 1");
  if (!(class_positive_rate > 0.0 && class_positive_rate < 1.0)) {
    throw ConfigError("class_positive_rate must lie in (0,1)");
  }
  if (!(attr_correlation >= -1.0 && attr_correlation <= 1.0)) {
    throw ConfigError("attr_correlation must lie in [-1,1]");
  }
  if (!(signal_scale >= 0.0) || !std::isfinite(signal_scale)) {
    throw ConfigError("signal_scale must be finite and non-negative");
  }
  std::set<std::string> names;
  for (const auto& a : attributes) {
    if (a.name.empty()) throw ConfigError("attribute with empty name");
    if (!names.insert(a.name).second) {
      throw ConfigError("duplicate attribute '" + a.name + "'");
    }
    if (!(a.marginal >= 0.0 && a.marginal <= 1.0)) {
      throw ConfigError("marginal of '" + a.name + "' must lie in [0,1]");
    }
    if (!std::isfinite(a.bias_shift)) {
      throw ConfigError("bias_shift of '" + a.name + "' must be finite");
    }
    for (double f : {a.flip_rate_a, a.flip_rate_b}) {
      if (!(f >= 0.0 && f < 0.5)) {
        throw ConfigError("flip rates of '" + a.name + "' must lie in [0,0.5)");
      }
    }
  }
  std::set<std::size_t> used;
  for (const auto& p : proxies) {
    if (p.feature >= d) throw ConfigError("proxy feature index out of range");
    if (!used.insert(p.feature).second) {
      throw ConfigError("feature " + std::to_string(p.feature) + " is proxied twice");
    }
    const auto idx = loading_indices(*this, p);
    if (proxy_variance(*this, p, idx) > 1.0 + 1e-12) {
      throw ConfigError("proxy loadings on feature " + std::to_string(p.feature) +
                        " exceed unit variance");
    }
  }
}

const SynthAttribute& SynthConfig::attribute(std::string_view name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return a;
  }
  throw ConfigError("unknown synthetic attribute '" + std::string(name) + "'");
}

Dataset generate(const SynthConfig& config) {
  config.validate();
  const std::size_t n = config.n;
  const std::size_t d = config.d;
  const std::size_t m = config.attributes.size();
  const double rho = config.attr_correlation;
  Rng rng(config.seed);

  std::vector<double> true_w(d);
  for (double& w : true_w) {
    w = rng.normal() * config.signal_scale / std::sqrt(static_cast<double>(d));
  }
  std::vector<std::vector<std::size_t>> proxy_attr;
  std::vector<double> proxy_noise;
  for (const auto& p : config.proxies) {
    true_w[p.feature] = 0.0;
    proxy_attr.push_back(loading_indices(config, p));
    proxy_noise.push_back(
        std::sqrt(std::max(0.0, 1.0 - proxy_variance(config, p, proxy_attr.back()))));
  }

  Matrix x(n, d);
  std::vector<SensitiveColumn> sensitive;
  for (const auto& a : config.attributes) {
    sensitive.push_back({a.name, std::vector<std::uint8_t>(n)});
  }
  std::vector<double> base(n);
  std::vector<double> label_u(n);
  std::vector<std::uint8_t> flipped(n, 0);
  std::vector<double> latent(m);
  const double rest = std::sqrt(std::max(0.0, 1.0 - rho * rho));

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < m; ++a) {
      const double g = rng.normal();
      latent[a] = a == 0 ? g : rho * latent[0] + rest * g;
      sensitive[a].values[i] =
          normal_cdf(latent[a]) < config.attributes[a].marginal ? 1 : 0;
    }
    auto row = x.row(i);
    for (double& v : row) v = rng.normal();
    // Group 1 sits in the lower tail of its latent draw, so -latent leans
    // towards group 1.
    for (std::size_t p = 0; p < config.proxies.size(); ++p) {
      double signal = 0.0;
      const auto& loadings = config.proxies[p].loadings;
      for (std::size_t l = 0; l < loadings.size(); ++l) {
        signal -= loadings[l].loading * latent[proxy_attr[p][l]];
      }
      double& v = row[config.proxies[p].feature];
      v = signal + proxy_noise[p] * v;
    }
    double logit = detail::dot(true_w, row);
    for (std::size_t a = 0; a < m; ++a) {
      if (sensitive[a].values[i]) logit += config.attributes[a].bias_shift;
    }
    base[i] = logit;
    label_u[i] = rng.uniform();
    for (std::size_t a = 0; a < m; ++a) {
      const auto& attr = config.attributes[a];
      const double rate = sensitive[a].values[i] ? attr.flip_rate_b : attr.flip_rate_a;
      if (rng.uniform() < rate) flipped[i] ^= 1;
    }
  }

  std::vector<std::uint8_t> labels(n);
  auto label_with = [&](double intercept) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t clean =
          label_u[i] < detail::logistic(base[i] + intercept) ? 1 : 0;
      labels[i] = clean ^ flipped[i];
      positives += labels[i];
    }
    return static_cast<double>(positives) / static_cast<double>(n);
  };
  double lo = -40.0;
  double hi = 40.0;
  double rate = 0.0;
  for (int step = 0; step < 100; ++step) {
    const double mid = 0.5 * (lo + hi);
    rate = label_with(mid);
    if (std::abs(rate - config.class_positive_rate) <= 1e-4) break;
    (rate < config.class_positive_rate ? lo : hi) = mid;
  }
  if (std::abs(rate - config.class_positive_rate) > 0.02) {
    throw DataError("could not calibrate the positive rate to " +
                    std::to_string(config.class_positive_rate) +
                    " (reached " + std::to_string(rate) + ")");
  }

  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
  try {
    return Dataset(std::move(x), std::move(labels), std::move(sensitive),
                   std::move(names));
  } catch (const DataError& e) {
    throw DataError(std::string("generated data is degenerate: ") + e.what() +
                    "; try a larger n");
  }
}

std::vector<std::string> preset_names() { return {"sud-like", "sepsis-like"}; }

SynthConfig preset(std::string_view name) {
  SynthConfig c;
  c.d = 10;
  c.signal_scale = 7.0;
  if (name == "sud-like") {
    // 9,149 negative + 1,524 positive patients.
    c.n = 10673;
    c.class_positive_rate = 0.143;
    c.attributes = {{"race", 0.897, -6.0, 0.0, 0.0}, {"sex", 0.355, 3.5, 0.0, 0.0}};
    c.seed = 20240611;
  } else if (name == "sepsis-like") {
    // 7,806 negative + 1,543 positive patients.
    c.n = 9349;
    c.class_positive_rate = 0.165;
    c.attributes = {{"race", 0.834, -6.0, 0.0, 0.0}, {"sex", 0.426, 3.5, 0.0, 0.0}};
    c.seed = 20240612;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) +
                      "' (expected sud-like or sepsis-like)");
  }
  // Disparity comes from group shifts that the model can only see through
  // the two proxy columns.
  c.attr_correlation = 0.0;
  c.proxies = {{0, {{"race", 0.95}}}, {1, {{"sex", 0.6}}}};
  return c;
}

}  // namespace fairtune
