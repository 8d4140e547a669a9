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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Tolerances are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fairtune/experiment.hpp"
#include "fairtune/fairloss.hpp"
#include "fairtune/metrics.hpp"
#include "fairtune/optimize.hpp"
#include "test_support.hpp"

namespace {

using namespace fairtune;
namespace fs = std::filesystem;
namespace tst = fairtune::testing;

// Metric oracle
constexpr int kOracleInstances = 50;
constexpr double kAurocTolerance = 1e-12;
constexpr double kOracleSeconds = 10.0;
// Gradients
constexpr int kGradientDraws = 100;
constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientSeconds = 30.0;
// Steep soft rates
constexpr double kSteepK = 1000.0;
constexpr double kRateGap = 1e-3;
constexpr double kEodGap = 2e-3;
// End-to-end
constexpr double kBaselineEodFloor = 0.10;
constexpr double kTestEodCeiling = 0.06;
constexpr int kSeedsRequired = 4;
constexpr double kAurocDropCeiling = 0.05;
constexpr double kSecondsPerSeed = 120.0;
// Ordering and collateral are read from the held-out table of the report.
constexpr Surface kOrderingSurface = Surface::kTest;
constexpr Surface kCollateralSurface = Surface::kTest;
constexpr double kRelativeImprovement = 0.30;
// Snapshot contract
constexpr int kContractSpecs = 20;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome metric_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(1001);
  double worst_auc = 0.0;
  int mismatches = 0;
  for (int trial = 0; trial < kOracleInstances; ++trial) {
    const std::size_t n = 4 + rng.below(497);
    const Dataset data = tst::random_dataset(rng, n, 2, 2);
    std::vector<double> probs(n);
    // Coarse grids force ties on some instances.
    const double grid = trial % 3 == 0 ? 20.0 : 1e9;
    for (double& p : probs) p = std::round(rng.uniform() * grid) / grid;
    const std::vector<std::uint8_t> y(data.labels().begin(), data.labels().end());
    worst_auc = std::max(worst_auc, std::abs(auroc(probs, data.labels()) - tst::brute_auroc(probs, y)));

    const double thr = 0.5;
    std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pos = probs[i] >= thr;
      if (y[i]) (pos ? tp : fn)++;
      else (pos ? fp : tn)++;
    }
    const ClassificationMetrics cm = classification_metrics(probs, data.labels(), thr);
    if (cm.sensitivity != static_cast<double>(tp) / static_cast<double>(tp + fn)) ++mismatches;
    if (cm.specificity != static_cast<double>(tn) / static_cast<double>(tn + fp)) ++mismatches;
    for (const char* attr : {"attr0", "attr1"}) {
      const auto brute = tst::brute_rates(probs, data.labels(), data.attribute(attr), thr);
      if (eod(group_rates(probs, data, attr, thr)) != brute.eod()) ++mismatches;
    }
  }
  const double secs = seconds_since(start);
  return {worst_auc <= kAurocTolerance && mismatches == 0 && secs < kOracleSeconds,
          "max AUROC error " + fmt("%.1e", worst_auc) + ", exact-count mismatches " +
              std::to_string(mismatches) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome gradients() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2002);
  double worst = 0.0;
  for (int draw = 0; draw < kGradientDraws; ++draw) {
    const Dataset data = tst::random_dataset(rng, 30 + rng.below(170), 1 + rng.below(5), 2);
    const ModelParams p = tst::random_params(rng, data.feature_count(), 0.7);
    const double k = 0.5 + 5.0 * rng.uniform();
    std::function<double(const ModelParams&)> f;
    ModelParams grad;
    CompositeObjective obj;
    switch (draw % 3) {
      case 0:
        grad = bce_loss_and_grad(p, data).grad;
        f = [&](const ModelParams& q) { return bce_loss_and_grad(q, data).loss; };
        break;
      case 1:
        grad = fairness_loss_and_grad(p, data, "attr0", k).grad;
        f = [&](const ModelParams& q) { return fairness_loss_and_grad(q, data, "attr0", k).loss; };
        break;
      default: {
        obj.soft.steepness = k;
        obj.fairness_attributes = {"attr0", "attr1"};
        obj.fairness_weights = {1.0, 0.5 + rng.uniform()};
        PenaltySpec perf;
        perf.reference = bce_loss_and_grad(p, data).loss - 0.1;
        PenaltySpec band;
        band.metric = PenaltyMetric::kAttributeEod;
        band.attribute = "attr1";
        band.reference = 0.0;
        band.tolerance = 0.0;
        obj.penalties = {perf, band};
        grad = composite_loss_and_grad(obj, p, data).grad;
        f = [&](const ModelParams& q) { return composite_loss_and_grad(obj, q, data).total; };
      }
    }
    worst = std::max(worst, tst::max_relative_error(tst::flatten(grad),
                                                    tst::finite_difference(f, p, 1e-6)));
  }
  const double secs = seconds_since(start);
  return {worst <= kGradientTolerance && secs < kGradientSeconds,
          "max relative error " + fmt("%.2e", worst) + " over " +
              std::to_string(kGradientDraws) + " draws, " + fmt("%.2f", secs) + " s"};
}

Outcome steep_limit() {
  Rng rng(3003);
  double worst_rate = 0.0, worst_eod = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 40 + rng.below(400);
    std::vector<double> logits(n);
    std::vector<std::uint8_t> y(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.01 + 3.0 * rng.uniform());
      y[i] = rng.uniform() < 0.4 ? 1 : 0;
      z[i] = rng.uniform() < 0.3 ? 1 : 0;
    }
    for (std::size_t c = 0; c < 4; ++c) {
      y[c] = c & 1;
      z[c] = static_cast<std::uint8_t>(c >> 1);
    }
    // The single feature is the logit itself.
    const Dataset data(Matrix(n, 1, logits), y, {{"z", z}});
    const ModelParams identity{{1.0}, 0.0};
    std::vector<double> probs(n);
    for (std::size_t i = 0; i < n; ++i) probs[i] = tst::naive_sigmoid(logits[i]);
    const GroupRates soft = soft_group_rates(identity, data, "z", kSteepK);
    const GroupRates hard = group_rates(probs, data, "z", 0.5);
    for (double gap : {soft.tpr_a - hard.tpr_a, soft.fpr_a - hard.fpr_a, soft.tpr_b - hard.tpr_b,
                       soft.fpr_b - hard.fpr_b}) {
      worst_rate = std::max(worst_rate, std::abs(gap));
    }
    worst_eod = std::max(worst_eod, std::abs(eod(soft) - eod(hard)));
  }
  return {worst_rate <= kRateGap && worst_eod <= kEodGap,
          "max rate gap " + fmt("%.2e", worst_rate) + ", max EOD gap " + fmt("%.2e", worst_eod)};
}

Outcome snapshot_contract() {
  Rng rng(7007);
  int violations = 0;
  for (int spec_i = 0; spec_i < kContractSpecs; ++spec_i) {
    const Dataset data = tst::random_dataset(rng, 200 + rng.below(400), 2 + rng.below(4), 3);
    TrainConfig tc;
    tc.learning_rate = 0.05;
    tc.max_epochs = 40;
    tc.seed = spec_i;
    const ModelParams start = train_performance(data, tc).params;
    FairnessSpec s;
    std::vector<std::string> pool{"attr0", "attr1", "attr2"};
    rng.shuffle(std::span(pool));
    pool.resize(1 + rng.below(3));
    s.attributes = pool;
    s.default_threshold = 0.01 + 0.1 * rng.uniform();
    s.thresholds[pool[0]] = 0.01 + 0.1 * rng.uniform();
    s.tolerance = 0.05 * rng.uniform();
    s.steepness = 1.0 + 9.0 * rng.uniform();
    s.learning_rate = 0.002 + 0.02 * rng.uniform();
    s.step_budget = 30 + rng.below(120);
    const FairModelResult r = spec_i % 2 ? optimize_simultaneous(start, data, s)
                                         : optimize_sequential(start, data, s);
    if (r.recorded_eods != hard_eods(r.params, data, s.attributes, s.classification_threshold)) {
      ++violations;
    }
    for (std::size_t i = 0; i < s.attributes.size(); ++i) {
      if (r.found_fair[i] && r.recorded_eods[i] > s.threshold(s.attributes[i])) ++violations;
    }
  }
  return {violations == 0, std::to_string(kContractSpecs) + " random specs, " +
                               std::to_string(violations) + " violations"};
}

ExperimentConfig shipped_config(const std::string& name, const fs::path& out) {
  KeyValueConfig kv = KeyValueConfig::load(fs::path(FAIRTUNE_SOURCE_DIR) / "configs" / name);
  kv.set("output.dir", out.string());
  return parse_experiment_config(kv);
}

Summary mean_of(const RunReport& r, const std::string& id, Surface s, const std::string& metric) {
  return summarize(r.scenario(id), s, metric);
}

Outcome end_to_end(const RunReport& r, double secs) {
  const auto& none = r.scenario("none");
  const auto& sim = r.scenario("simultaneous");
  if (none.aborted || sim.aborted) return {false, "scenario aborted: " + none.error + sim.error};
  double min_baseline = 1.0;
  int good = 0;
  double drop = 0.0;
  const std::size_t reps = sim.repetitions.size();
  for (std::size_t i = 0; i < reps; ++i) {
    for (const auto& a : r.attributes) {
      min_baseline = std::min(min_baseline, none.repetitions[i].train.at(a).eod);
    }
    const auto& t = sim.repetitions[i].test;
    if (t.at("race").eod <= kTestEodCeiling && t.at("sex").eod <= kTestEodCeiling) ++good;
    drop += none.repetitions[i].test.auroc - t.auroc;
  }
  drop /= static_cast<double>(reps);
  const double per_seed = secs / static_cast<double>(reps);
  std::string detail = "min baseline train EOD " + fmt("%.4f", min_baseline) + ", seeds with test EOD <= " +
                       fmt("%.2f", kTestEodCeiling) + " on both: " + std::to_string(good) + "/" +
                       std::to_string(reps) + ", mean AUROC drop " + fmt("%.4f", drop) + ", " +
                       fmt("%.1f", per_seed) + " s per seed";
  return {min_baseline >= kBaselineEodFloor && good >= kSeedsRequired &&
              drop <= kAurocDropCeiling && per_seed < kSecondsPerSeed,
          detail};
}

// The first-optimized attribute ends with the lower mean EOD, in both orders.
Outcome ordering(const RunReport& r, Surface surface) {
  bool ok = true;
  std::string detail;
  for (const auto& [first, second] : {std::pair<std::string, std::string>{"race", "sex"},
                                      std::pair<std::string, std::string>{"sex", "race"}}) {
    const std::string id = "sequential(" + first + "," + second + ")";
    if (r.scenario(id).aborted) return {false, id + " aborted"};
    const double a = mean_of(r, id, surface, "eod:" + first).mean;
    const double b = mean_of(r, id, surface, "eod:" + second).mean;
    ok = ok && a <= b;
    detail += (detail.empty() ? "" : "; ") + id + " " + first + " " + fmt("%.4f", a) + " vs " +
              second + " " + fmt("%.4f", b);
  }
  return {ok, detail};
}

// single(A): B not improved beyond one pooled deviation, A improved >= 30%.
Outcome collateral(const RunReport& r, Surface surface) {
  bool any = false;
  std::string detail;
  for (const auto& [a, b] : {std::pair<std::string, std::string>{"race", "sex"},
                             std::pair<std::string, std::string>{"sex", "race"}}) {
    const std::string id = "single(" + a + ")";
    if (r.scenario(id).aborted) continue;
    const Summary base_a = mean_of(r, "none", surface, "eod:" + a);
    const Summary base_b = mean_of(r, "none", surface, "eod:" + b);
    const Summary fair_a = mean_of(r, id, surface, "eod:" + a);
    const Summary fair_b = mean_of(r, id, surface, "eod:" + b);
    const double pooled = std::sqrt(0.5 * (base_b.std * base_b.std + fair_b.std * fair_b.std));
    const bool not_improved = fair_b.mean >= base_b.mean - pooled;
    const bool improved = fair_a.mean <= (1.0 - kRelativeImprovement) * base_a.mean;
    any = any || (not_improved && improved);
    detail += (detail.empty() ? "" : "; ") + id + ": " + a + " " + fmt("%.4f", base_a.mean) +
              "->" + fmt("%.4f", fair_a.mean) + ", " + b + " " + fmt("%.4f", base_b.mean) +
              "->" + fmt("%.4f", fair_b.mean) + (not_improved && improved ? " (shown)" : "");
  }
  return {any, detail};
}

Outcome determinism(const fs::path& root) {
  auto run_once = [&](const fs::path& out) {
    KeyValueConfig kv = KeyValueConfig::load(fs::path(FAIRTUNE_SOURCE_DIR) / "configs" / "sud-like.cfg");
    kv.set("output.dir", out.string());
    kv.set("repetitions", "2");
    kv.set("synth.n", "3000");
    kv.set("train.max_epochs", "100");
    kv.set("fairness.step_budget", "200");
    kv.set("output.format", "csv");
    const ExperimentConfig c = parse_experiment_config(kv);
    emit_report(run_experiment(c), c);
  };
  run_once(root / "det_a");
  run_once(root / "det_b");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  bool same = true;
  std::size_t bytes = 0;
  for (const char* f : {"repetitions.csv", "summary.csv"}) {
    const std::string a = slurp(root / "det_a" / f);
    same = same && !a.empty() && a == slurp(root / "det_b" / f);
    bytes += a.size();
  }
  return {same, std::string(same ? "report CSVs byte-identical" : "report CSVs differ") + " (" +
                    std::to_string(bytes) + " bytes compared)"};
}

void print(int id, const std::string& name, const Outcome& o) {
  std::printf("criterion %d [%s]: %s - %s\n", id, name.c_str(), o.pass ? "PASS" : "FAIL",
              o.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "fairtune_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  std::vector<Outcome> results;
  auto record = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    print(id, name, o);
    results.push_back(o);
  };

  record(1, "metric oracle", metric_oracle);
  record(2, "gradient check", gradients);
  record(3, "steep soft rates", steep_limit);

  RunReport report;
  double secs = 0.0;
  std::string run_error;
  try {
    const ExperimentConfig c = shipped_config("sud-like.cfg", root / "sud");
    const auto start = std::chrono::steady_clock::now();
    report = run_experiment(c);
    secs = seconds_since(start);
    emit_report(report, c);
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  auto with_report = [&](const std::function<Outcome()>& f) {
    return [&, f] { return run_error.empty() ? f() : Outcome{false, "run failed: " + run_error}; };
  };
  record(4, "simultaneous end-to-end", with_report([&] { return end_to_end(report, secs); }));
  record(5, "sequential ordering", with_report([&] { return ordering(report, kOrderingSurface); }));
  // Shown on any shipped preset; the second preset only runs if needed.
  record(6, "collateral disparity", with_report([&] {
    Outcome sud = collateral(report, kCollateralSurface);
    sud.detail = "sud-like " + sud.detail;
    if (sud.pass) return sud;
    const ExperimentConfig c = shipped_config("sepsis-like.cfg", root / "sepsis");
    Outcome sepsis = collateral(run_experiment(c), kCollateralSurface);
    sepsis.detail = sud.detail + " | sepsis-like " + sepsis.detail;
    return sepsis;
  }));
  record(7, "snapshot contract", snapshot_contract);
  record(8, "determinism", [&] { return determinism(root); });

  fs::remove_all(root);
  const bool all = std::all_of(results.begin(), results.end(), [](const Outcome& o) { return o.pass; });
  std::printf("%s\n", all ? "all criteria passed" : "some criteria failed");
  return all ? 0 : 1;
}
