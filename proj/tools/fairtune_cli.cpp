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

// fairtune command line: run experiments, export synthetic presets, audit
// a saved model against a labelled CSV.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairtune/config.hpp"
#include "fairtune/dataset.hpp"
#include "fairtune/error.hpp"
#include "fairtune/experiment.hpp"
#include "fairtune/metrics.hpp"
#include "fairtune/model.hpp"
#include "fairtune/optimize.hpp"
#include "fairtune/synthgen.hpp"

namespace {

using namespace fairtune;

int fail(const Error& e) {
  std::cerr << "fairtune: " << to_string(e.kind()) << " error: " << e.what() << '\n';
  return exit_code(e.kind());
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& output_dir,
            const std::optional<std::string>& format, const std::optional<std::uint64_t>& seed) {
  KeyValueConfig kv = KeyValueConfig::load(config_path);
  if (output_dir) kv.set("output.dir", *output_dir);
  if (format) kv.set("output.format", *format);
  if (seed) kv.set("train.seed", std::to_string(*seed));
  const ExperimentConfig config = parse_experiment_config(kv);
  const RunReport report = run_experiment(config);
  for (const auto& path : emit_report(report, config)) std::cout << path.string() << '\n';
  int status = 0;
  for (const auto& s : report.scenarios) {
    if (!s.aborted) continue;
    std::cerr << "fairtune: scenario " << s.scenario.id() << " aborted ("
              << to_string(s.error_kind) << "): " << s.error << '\n';
    if (status == 0) status = exit_code(s.error_kind);
  }
  return status;
}

int cmd_synth(const std::string& name, const std::string& out,
              const std::optional<std::uint64_t>& seed) {
  SynthConfig config = preset(name);
  if (seed) config.seed = *seed;
  write_csv(generate(config), out);
  return 0;
}

int cmd_audit(const std::string& model_path, const std::string& data_path,
              const std::string& label, const std::vector<std::string>& sensitive,
              double threshold, const std::string& format) {
  if (sensitive.empty()) throw ConfigError("audit needs --sensitive <column,...>");
  const ModelParams params = load_model(model_path);
  const Dataset data = load_csv(data_path, label, sensitive);
  const MetricsReport m = evaluate_model(params, data, sensitive, threshold);
  if (format == "csv") {
    std::printf("metric,value\nauroc,%.17g\nsensitivity,%.17g\nspecificity,%.17g\n", m.auroc,
                m.sensitivity, m.specificity);
    for (const auto& a : m.attributes) {
      std::printf("eod:%s,%.17g\ndp_diff:%s,%.17g\neopp_diff:%s,%.17g\ncalibration_gap:%s,%.17g\n",
                  a.attribute.c_str(), a.eod, a.attribute.c_str(), a.dp_diff,
                  a.attribute.c_str(), a.eopp_diff, a.attribute.c_str(), a.calibration_gap);
    }
  } else {
    std::printf("| Metric | Value |\n|---|---|\n| AUROC | %.4f |\n| Sensitivity | %.4f |\n"
                "| Specificity | %.4f |\n", m.auroc, m.sensitivity, m.specificity);
    for (const auto& a : m.attributes) {
      std::printf("| %s EOD | %.4f |\n| %s demographic parity gap | %.4f |\n"
                  "| %s equal opportunity gap | %.4f |\n| %s calibration gap | %.4f |\n",
                  a.attribute.c_str(), a.eod, a.attribute.c_str(), a.dp_diff,
                  a.attribute.c_str(), a.eopp_diff, a.attribute.c_str(), a.calibration_gap);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairtune: fairness fine-tuning of logistic models over several sensitive attributes"};
  app.require_subcommand(1);

  std::optional<std::string> output_dir;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--output-dir", output_dir, "Directory for report files");
    sub->add_option("--format", format, "Report format")
        ->check(CLI::IsMember({"csv", "markdown"}));
    sub->add_option("--seed", seed, "Base seed override");
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file")->required();
  add_common(run);

  std::string preset_name, synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic preset to CSV");
  synth->add_option("preset", preset_name, "Preset name")->required();
  synth->add_option("out", synth_out, "Output CSV")->required();
  add_common(synth);

  std::string model_path, data_path, label = "y";
  std::vector<std::string> sensitive;
  double threshold = 0.5;
  auto* audit = app.add_subcommand("audit", "Evaluate a saved model on a labelled CSV");
  audit->add_option("model", model_path, "Model file")->required();
  audit->add_option("data", data_path, "CSV file")->required();
  audit->add_option("--label", label, "Label column")->capture_default_str();
  audit->add_option("--sensitive", sensitive, "Sensitive columns")->delimiter(',');
  audit->add_option("--threshold", threshold, "Classification threshold")->capture_default_str();
  add_common(audit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::kConfig);
  }

  try {
    if (*run) return cmd_run(config_path, output_dir, format, seed);
    if (*synth) return cmd_synth(preset_name, synth_out, seed);
    return cmd_audit(model_path, data_path, label, sensitive, threshold,
                     format.value_or("markdown"));
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    std::cerr << "fairtune: " << e.what() << '\n';
    return 1;
  }
}
