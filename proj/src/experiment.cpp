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

#include "fairtune/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fairtune {
namespace {

std::string num17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

SynthConfig parse_synth(const KeyValueConfig& kv, const std::string& preset_name) {
  SynthConfig c = preset_name.empty() ? SynthConfig{} : preset(preset_name);
  c.n = kv.get_size("synth.n", c.n);
  c.d = kv.get_size("synth.d", c.d);
  c.seed = kv.get_u64("synth.seed", c.seed);
  c.class_positive_rate = kv.get_double("synth.class_positive_rate", c.class_positive_rate);
  c.attr_correlation = kv.get_double("synth.attr_correlation", c.attr_correlation);
  c.signal_scale = kv.get_double("synth.signal_scale", c.signal_scale);
  if (kv.has("synth.attributes")) {
    std::vector<SynthAttribute> attrs;
    for (const auto& name : kv.get_list("synth.attributes", {})) {
      SynthAttribute a;
      a.name = name;
      for (const auto& old : c.attributes) {
        if (old.name == name) a = old;
      }
      attrs.push_back(a);
    }
    c.attributes = std::move(attrs);
  }
  for (auto& a : c.attributes) {
    a.marginal = kv.get_double("synth.marginal." + a.name, a.marginal);
    a.bias_shift = kv.get_double("synth.bias_shift." + a.name, a.bias_shift);
    const std::string flip_key = "synth.flip_rate." + a.name;
    if (kv.has(flip_key)) {
      const auto parts = kv.get_list(flip_key, {});
      if (parts.size() != 2) {
        throw ConfigError(flip_key + ": expected '<group-0 rate>,<group-1 rate>'");
      }
      a.flip_rate_a = parse_double(parts[0], flip_key);
      a.flip_rate_b = parse_double(parts[1], flip_key);
    }
  }
  if (kv.get_bool("synth.no_proxies", false)) c.proxies.clear();
  const auto proxy_keys = kv.suffixes("synth.proxy");
  if (!proxy_keys.empty()) {
    c.proxies.clear();
    for (const auto& suffix : proxy_keys) {
      const std::string key = "synth.proxy." + suffix;
      ProxyFeature p;
      p.feature = static_cast<std::size_t>(parse_u64(suffix, key));
      for (const auto& item : kv.get_list(key, {})) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
          throw ConfigError(key + ": expected '<attribute>:<loading>' items");
        }
        p.loadings.push_back(
            {item.substr(0, colon), parse_double(item.substr(colon + 1), key)});
      }
      c.proxies.push_back(std::move(p));
    }
  }
  return c;
}

}  // namespace

Scenario Scenario::parse(const std::string& text) {
  Scenario s;
  std::string head = text;
  std::vector<std::string> args;
  const auto open = text.find('(');
  if (open != std::string::npos) {
    if (text.back() != ')') throw ConfigError("malformed scenario '" + text + "'");
    head = text.substr(0, open);
    args = split_list(std::string_view(text).substr(open + 1, text.size() - open - 2));
  }
  if (head == "none" && open == std::string::npos) {
    s.kind = Kind::kNone;
  } else if (head == "single" && args.size() == 1) {
    s.kind = Kind::kSingle;
  } else if (head == "sequential" && !args.empty()) {
    s.kind = Kind::kSequential;
  } else if (head == "simultaneous") {
    s.kind = Kind::kSimultaneous;
  } else {
    throw ConfigError("unknown scenario '" + text +
                      "' (expected none, single(a), sequential(a,b,...), "
                      "simultaneous or simultaneous(a,b,...))");
  }
  s.attributes = std::move(args);
  return s;
}

std::string Scenario::id() const {
  switch (kind) {
    case Kind::kNone:
      return "none";
    case Kind::kSingle:
      return "single(" + attributes.at(0) + ")";
    case Kind::kSequential:
      return "sequential(" + join(attributes, ",") + ")";
    case Kind::kSimultaneous:
      return attributes.empty() ? "simultaneous"
                                : "simultaneous(" + join(attributes, ",") + ")";
  }
  return "?";
}

std::string Scenario::slug() const {
  std::string out;
  for (char c : id()) {
    if (c == '(') out += '_';
    else if (c == ',') out += '-';
    else if (c != ')') out += c;
  }
  return out;
}

std::string Scenario::fair_method() const {
  switch (kind) {
    case Kind::kNone:
      return "None";
    case Kind::kSingle:
      return "Single-attribute";
    case Kind::kSequential:
      return "Sequential";
    case Kind::kSimultaneous:
      return "Simultaneous";
  }
  return "?";
}

std::string Scenario::model_name() const {
  std::vector<std::string> caps;
  for (const auto& a : attributes) caps.push_back(capitalize(a));
  switch (kind) {
    case Kind::kNone:
      return "Best Performing Model";
    case Kind::kSingle:
      return caps.at(0) + "-Fair Model";
    case Kind::kSequential:
      return "Sequential(" + join(caps, ", ") + ")";
    case Kind::kSimultaneous:
      return caps.empty() ? "Multi-Fair Model"
                          : "Multi-Fair Model (" + join(caps, " & ") + ")";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  train.validate();
  if (repetitions == 0) throw ConfigError("repetitions must be at least 1");
  if (scenarios.empty()) throw ConfigError("no scenarios configured");
  const std::set<std::string> known(fairness.attributes.begin(), fairness.attributes.end());
  std::set<std::string> ids;
  for (const auto& s : scenarios) {
    if (!ids.insert(s.id()).second) throw ConfigError("scenario '" + s.id() + "' listed twice");
    for (const auto& a : s.attributes) {
      if (!known.count(a)) {
        throw ConfigError("scenario '" + s.id() + "' names '" + a +
                          "', which is not a fairness attribute");
      }
    }
  }
}

ExperimentConfig parse_experiment_config(const KeyValueConfig& kv) {
  ExperimentConfig c;
  const std::string source = kv.get_string("data.source", "synth");
  if (source == "synth") {
    c.data.kind = DataSource::Kind::kSynth;
    c.data.preset_name = kv.get_string("data.preset", "");
    c.data.synth = parse_synth(kv, c.data.preset_name);
    c.data.label_column = "y";
    for (const auto& a : c.data.synth.attributes) c.data.sensitive_columns.push_back(a.name);
  } else if (source == "csv") {
    c.data.kind = DataSource::Kind::kCsv;
    c.data.csv_path = kv.require_string("data.path");
    c.data.label_column = kv.get_string("data.label", "y");
    c.data.sensitive_columns = kv.get_list("data.sensitive", {});
    if (c.data.sensitive_columns.empty()) {
      throw ConfigError("data.sensitive must list at least one column");
    }
  } else {
    throw ConfigError("data.source must be synth or csv, got '" + source + "'");
  }
  c.data.standardize = kv.get_bool("data.standardize", false);

  c.split.train_fraction = kv.get_double("split.train_fraction", c.split.train_fraction);
  c.split.seed = kv.get_u64("split.seed", c.split.seed);

  auto& t = c.train;
  t.learning_rate = kv.get_double("train.learning_rate", t.learning_rate);
  t.batch_size = kv.get_size("train.batch_size", t.batch_size);
  t.max_epochs = kv.get_size("train.max_epochs", t.max_epochs);
  t.beta1 = kv.get_double("train.beta1", t.beta1);
  t.beta2 = kv.get_double("train.beta2", t.beta2);
  t.adam_epsilon = kv.get_double("train.adam_epsilon", t.adam_epsilon);
  t.early_stop_window = kv.get_size("train.early_stop_window", t.early_stop_window);
  t.early_stop_delta = kv.get_double("train.early_stop_delta", t.early_stop_delta);
  t.seed = kv.get_u64("train.seed", t.seed);
  t.init_noise = kv.get_double("train.init_noise", t.init_noise);

  auto& f = c.fairness;
  f.attributes = kv.get_list("fairness.attributes", c.data.sensitive_columns);
  f.default_threshold = kv.get_double("fairness.threshold", f.default_threshold);
  for (const auto& a : f.attributes) {
    const std::string key = "fairness.threshold." + a;
    if (kv.has(key)) f.thresholds[a] = kv.get_double(key, f.default_threshold);
  }
  f.step_budget = kv.get_size("fairness.step_budget", f.step_budget);
  f.tolerance = kv.get_double("fairness.tolerance", f.tolerance);
  f.steepness = kv.get_double("fairness.steepness", f.steepness);
  f.learning_rate = kv.get_double("fairness.learning_rate", f.learning_rate);
  f.performance_weight = kv.get_double("fairness.performance_weight", f.performance_weight);
  f.fairness_penalty_weight =
      kv.get_double("fairness.fairness_penalty_weight", f.fairness_penalty_weight);
  f.classification_threshold =
      kv.get_double("evaluation.threshold", f.classification_threshold);

  std::vector<std::string> default_scenarios{"none"};
  for (const auto& a : f.attributes) default_scenarios.push_back("single(" + a + ")");
  if (f.attributes.size() > 1) default_scenarios.push_back("simultaneous");
  for (const auto& text : kv.get_list("scenarios", default_scenarios)) {
    c.scenarios.push_back(Scenario::parse(text));
  }
  c.repetitions = kv.get_size("repetitions", c.repetitions);
  c.output_dir = kv.get_string("output.dir", c.output_dir.string());
  const std::string format = kv.get_string("output.format", "markdown");
  if (format == "markdown") {
    c.format = ReportFormat::kMarkdown;
  } else if (format == "csv") {
    c.format = ReportFormat::kCsv;
  } else {
    throw ConfigError("output.format must be markdown or csv, got '" + format + "'");
  }
  c.write_traces = kv.get_bool("output.traces", c.write_traces);
  c.write_models = kv.get_bool("output.models", c.write_models);
  kv.check_all_used();
  c.validate();
  return c;
}

bool RunReport::any_aborted() const {
  return std::any_of(scenarios.begin(), scenarios.end(),
                     [](const ScenarioResult& s) { return s.aborted; });
}

const ScenarioResult& RunReport::scenario(const std::string& id) const {
  for (const auto& s : scenarios) {
    if (s.scenario.id() == id) return s;
  }
  throw ConfigError("report has no scenario '" + id + "'");
}

double metric_value(const MetricsReport& report, const std::string& metric) {
  if (metric == "auroc") return report.auroc;
  if (metric == "sensitivity") return report.sensitivity;
  if (metric == "specificity") return report.specificity;
  const auto colon = metric.find(':');
  if (colon != std::string::npos) {
    const std::string kind = metric.substr(0, colon);
    const AttributeMetrics& a = report.at(metric.substr(colon + 1));
    if (kind == "eod") return a.eod;
    if (kind == "dp_diff") return a.dp_diff;
    if (kind == "eopp_diff") return a.eopp_diff;
    if (kind == "calibration_gap") return a.calibration_gap;
  }
  throw ConfigError("unknown metric '" + metric + "'");
}

Summary summarize(const ScenarioResult& result, Surface surface,
                  const std::string& metric) {
  std::vector<double> values;
  for (const auto& rep : result.repetitions) {
    values.push_back(metric_value(surface == Surface::kTrain ? rep.train : rep.test, metric));
  }
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

Dataset load_experiment_data(const DataSource& source) {
  if (source.kind == DataSource::Kind::kSynth) return generate(source.synth);
  return load_csv(source.csv_path, source.label_column, source.sensitive_columns);
}

RunReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Dataset full = load_experiment_data(config.data);
  config.fairness.validate(full);
  TrainTestSplit split = stratified_split(full, config.split);
  if (config.data.standardize) {
    const Standardizer scaler = Standardizer::fit(split.train);
    split = {scaler.apply(split.train), scaler.apply(split.test)};
  }
  const Dataset& train = split.train;
  const Dataset& test = split.test;
  const auto& attributes = config.fairness.attributes;
  const double threshold = config.fairness.classification_threshold;

  RunReport report;
  report.attributes = attributes;
  report.repetitions = config.repetitions;
  report.train_rows = train.rows();
  report.test_rows = test.rows();
  for (const auto& s : config.scenarios) report.scenarios.push_back({s, {}, false, {}, {}});

  auto abort = [](ScenarioResult& s, const Error& e, const std::string& where) {
    s.aborted = true;
    s.error_kind = e.kind();
    s.error = where + ": " + e.what();
  };

  for (std::size_t r = 0; r < config.repetitions; ++r) {
    TrainConfig tc = config.train;
    tc.seed = config.train.seed + r;
    const std::string where = "repetition " + std::to_string(r);
    std::optional<ModelParams> performance;
    try {
      performance = train_performance(train, tc).params;
    } catch (const Error& e) {
      for (auto& s : report.scenarios) {
        if (!s.aborted) abort(s, e, where + ", performance phase");
      }
      continue;
    }
    for (auto& s : report.scenarios) {
      if (s.aborted) continue;
      try {
        RepetitionResult rep;
        rep.repetition = r;
        rep.seed = tc.seed;
        FairnessSpec fs = config.fairness;
        const auto& kind = s.scenario.kind;
        if (kind == Scenario::Kind::kNone) {
          rep.params = *performance;
        } else {
          if (!s.scenario.attributes.empty()) fs.attributes = s.scenario.attributes;
          FairModelResult fair = kind == Scenario::Kind::kSimultaneous
                                     ? optimize_simultaneous(*performance, train, fs)
                                     : optimize_sequential(*performance, train, fs);
          rep.params = std::move(fair.params);
          rep.steps = fair.trace.steps.size();
          // found_fair is reported against the full attribute list.
          for (const auto& a : attributes) {
            const auto it = std::find(fs.attributes.begin(), fs.attributes.end(), a);
            rep.found_fair.push_back(
                it != fs.attributes.end() &&
                fair.found_fair[static_cast<std::size_t>(it - fs.attributes.begin())]);
          }
          rep.trace = std::move(fair.trace);
        }
        rep.train = evaluate_model(rep.params, train, attributes, threshold);
        rep.test = evaluate_model(rep.params, test, attributes, threshold);
        s.repetitions.push_back(std::move(rep));
      } catch (const Error& e) {
        abort(s, e, where);
      }
    }
  }
  return report;
}

std::string format_mean_std(const Summary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f \xC2\xB1 %.4f", s.mean, s.std);
  return buf;
}

namespace {

void render_table(std::ostringstream& os, const RunReport& report, Surface surface) {
  os << "| Fair Method | Model | AUROC | Sensitivity | Specificity |";
  for (const auto& a : report.attributes) os << ' ' << capitalize(a) << " EOD |";
  os << "\n|---|---|---|---|---|";
  for (std::size_t i = 0; i < report.attributes.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& s : report.scenarios) {
    os << "| " << s.scenario.fair_method() << " | " << s.scenario.model_name() << " |";
    std::vector<std::string> metrics{"auroc", "sensitivity", "specificity"};
    for (const auto& a : report.attributes) metrics.push_back("eod:" + a);
    for (const auto& m : metrics) {
      os << ' ' << (s.aborted ? std::string("aborted") : format_mean_std(summarize(s, surface, m)))
         << " |";
    }
    os << '\n';
  }
}

}  // namespace

std::string render_markdown(const RunReport& report) {
  std::ostringstream os;
  os << "# Fairness fine-tuning report\n\n";
  os << "Repetitions: " << report.repetitions << ". Training rows: " << report.train_rows
     << ". Test rows: " << report.test_rows
     << ". Cells show mean \xC2\xB1 sample standard deviation over repetitions.\n\n";
  os << "## Test set\n\n";
  render_table(os, report, Surface::kTest);
  os << "\n## Training set\n\n";
  render_table(os, report, Surface::kTrain);
  if (report.any_aborted()) {
    os << "\n## Aborted scenarios\n\n";
    for (const auto& s : report.scenarios) {
      if (s.aborted) {
        os << "- " << s.scenario.id() << " (" << to_string(s.error_kind)
           << " error): " << s.error << '\n';
      }
    }
  }
  return os.str();
}

std::string render_repetitions_csv(const RunReport& report) {
  std::ostringstream os;
  os << "scenario,fair_method,model,repetition,seed,surface,auroc,sensitivity,specificity";
  for (const char* kind : {"eod", "dp_diff", "eopp_diff", "calibration_gap"}) {
    for (const auto& a : report.attributes) os << ',' << kind << '_' << a;
  }
  for (const auto& a : report.attributes) os << ",found_fair_" << a;
  os << ",steps\n";
  for (const auto& s : report.scenarios) {
    for (const auto& rep : s.repetitions) {
      for (Surface surface : {Surface::kTrain, Surface::kTest}) {
        const MetricsReport& m = surface == Surface::kTrain ? rep.train : rep.test;
        os << '"' << s.scenario.id() << "\"," << s.scenario.fair_method() << ",\""
           << s.scenario.model_name() << "\"," << rep.repetition << ',' << rep.seed << ','
           << (surface == Surface::kTrain ? "train" : "test") << ',' << num17(m.auroc) << ','
           << num17(m.sensitivity) << ',' << num17(m.specificity);
        for (const auto& a : m.attributes) os << ',' << num17(a.eod);
        for (const auto& a : m.attributes) os << ',' << num17(a.dp_diff);
        for (const auto& a : m.attributes) os << ',' << num17(a.eopp_diff);
        for (const auto& a : m.attributes) os << ',' << num17(a.calibration_gap);
        for (std::size_t i = 0; i < report.attributes.size(); ++i) {
          os << ',';
          if (!rep.found_fair.empty()) os << (rep.found_fair[i] ? 1 : 0);
        }
        os << ',' << rep.steps << '\n';
      }
    }
  }
  return os.str();
}

std::string render_summary_csv(const RunReport& report) {
  std::ostringstream os;
  os << "scenario,fair_method,model,surface,metric,mean,std,repetitions,aborted\n";
  std::vector<std::string> metrics{"auroc", "sensitivity", "specificity"};
  for (const char* kind : {"eod", "dp_diff", "eopp_diff", "calibration_gap"}) {
    for (const auto& a : report.attributes) metrics.push_back(std::string(kind) + ":" + a);
  }
  for (const auto& s : report.scenarios) {
    for (Surface surface : {Surface::kTest, Surface::kTrain}) {
      for (const auto& m : metrics) {
        const Summary sum = summarize(s, surface, m);
        os << '"' << s.scenario.id() << "\"," << s.scenario.fair_method() << ",\""
           << s.scenario.model_name() << "\"," << (surface == Surface::kTrain ? "train" : "test")
           << ',' << m << ',' << num17(sum.mean) << ',' << num17(sum.std) << ','
           << s.repetitions.size() << ',' << (s.aborted ? 1 : 0) << '\n';
      }
    }
  }
  return os.str();
}

std::vector<std::filesystem::path> emit_report(const RunReport& report,
                                               const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const fs::path& dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<fs::path> written;
  auto write = [&](const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    written.push_back(path);
  };
  write(dir / "repetitions.csv", render_repetitions_csv(report));
  if (config.format == ReportFormat::kMarkdown) {
    write(dir / "report.md", render_markdown(report));
  } else {
    write(dir / "summary.csv", render_summary_csv(report));
  }
  if (config.write_traces || config.write_models) {
    for (const auto& s : report.scenarios) {
      for (const auto& rep : s.repetitions) {
        const std::string stem = s.scenario.slug() + "_rep" + std::to_string(rep.repetition);
        if (config.write_traces && rep.trace) {
          fs::create_directories(dir / "traces", ec);
          std::ostringstream os;
          rep.trace->write_csv(os);
          write(dir / "traces" / (stem + ".csv"), os.str());
        }
        if (config.write_models) {
          fs::create_directories(dir / "models", ec);
          write(dir / "models" / (stem + ".model"), format_model(rep.params));
        }
      }
    }
  }
  return written;
}

}  // namespace fairtune
