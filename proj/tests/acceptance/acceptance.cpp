/*
 * Copyright 2026 The AVDA Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. Every tolerance is fixed below.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "avda/distributions.hpp"
#include "avda/eval.hpp"
#include "avda/losses.hpp"
#include "avda/optim.hpp"
#include "avda/trainer.hpp"
#include "support/oracles.hpp"

using namespace avda;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr int kKlConfigs = 50;
constexpr int kKlSamples = 100000;
constexpr double kKlRelTol = 0.05;
constexpr double kKlSeconds = 30.0;
// Criterion 2
constexpr double kFdTol = 1e-5;
constexpr double kFdSeconds = 60.0;
// Criterion 3
constexpr std::size_t kGumbelDraws = 100000;
constexpr std::size_t kGumbelClasses = 10;
constexpr double kGumbelSigmas = 3.0;
constexpr double kGumbelSeconds = 10.0;
// Criterion 4
constexpr double kAdamTol = 1e-12;
// Criteria 5 to 7
constexpr std::size_t kBenchSeeds = 5;
constexpr double kUdaGain = 0.10;
constexpr double kUdaSeconds = 180.0;
constexpr double kShotsSeconds = 600.0;
// Ablation ties: the larger of the pooled standard deviation and half a point.
constexpr double kTieFloor = 0.005;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double pooled_sd(const std::vector<double>& a, const std::vector<double>& b) {
  return std::sqrt(0.5 * (sample_var(a) + sample_var(b)));
}

Outcome analytic_kl() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20260101);
  double worst = 0.0;
  for (int c = 0; c < kKlConfigs; ++c) {
    const Tensor mu = rng.uniform({1, 20}, -1, 1), lv = rng.uniform({1, 20}, -1, 1);
    const Tensor my = rng.uniform({1, 20}, -1, 1), ly = rng.uniform({1, 20}, -1, 1);
    Tape tape;
    const double analytic =
        kl_gaussian_to_component({tape.constant(mu), tape.constant(lv)}, tape.constant(my), tape.constant(ly))
            .value()
            .item();
    const double mc = oracle::mc_kl(oracle::row_of(mu, 0), oracle::row_of(lv, 0), oracle::row_of(my, 0),
                                    oracle::row_of(ly, 0), kKlSamples, 1000 + static_cast<std::uint64_t>(c));
    worst = std::max(worst, oracle::rel_err(analytic, mc));
  }
  const double secs = seconds_since(t0);
  return {worst < kKlRelTol && secs < kKlSeconds,
          fmt("%d configs, worst relative error %.4f (limit %.2f), %.1f s (limit %.0f s)", kKlConfigs, worst,
              kKlRelTol, secs, kKlSeconds)};
}

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::size_t D = 3, K = 3, J = 4;
  Rng rng(7);
  auto labeled = [&](std::size_t n) {
    Batch b{rng.uniform({n, D}, -1, 1), {}};
    for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(i % K));
    return b;
  };
  auto unlabeled = [&](std::size_t n) { return Batch{rng.uniform({n, D}, -1, 1), {}}; };

  struct Case {
    std::string name;
    bool binary;
    std::vector<Group> claimed;
    oracle::LossFn loss;
  };
  const LossWeights w;
  LossOptions plain, binary, prior_on, with_decoder;
  binary.binary_discriminator = true;
  prior_on.train_prior_on_target = true;
  with_decoder.target_decoder = true;
  const Batch lab = labeled(4), unl = unlabeled(5), src = labeled(5);
  const std::vector<Case> cases{
      {"source", false, {Group::source_encoder, Group::source_classifier, Group::decoder, Group::prior},
       [&](const BoundBundle& b, LossNoise& n) { return source_supervised_loss(b, src, w, n); }},
      {"target_supervised", false, {Group::target_encoder, Group::target_classifier},
       [&](const BoundBundle& b, LossNoise& n) { return target_supervised_loss(b, lab, w, plain, n); }},
      {"target_supervised+prior", false, {Group::target_encoder, Group::target_classifier, Group::prior},
       [&](const BoundBundle& b, LossNoise& n) { return target_supervised_loss(b, lab, w, prior_on, n); }},
      {"target_unsupervised", false, {Group::target_encoder, Group::target_classifier},
       [&](const BoundBundle& b, LossNoise& n) { return target_unsupervised_loss(b, unl, w, plain, n); }},
      {"target_unsupervised+prior", false, {Group::target_encoder, Group::target_classifier, Group::prior},
       [&](const BoundBundle& b, LossNoise& n) { return target_unsupervised_loss(b, unl, w, prior_on, n); }},
      {"discriminator", false, {Group::discriminator},
       [&](const BoundBundle& b, LossNoise& n) { return discriminator_loss(b, src, unl, plain, n); }},
      {"discriminator/binary", true, {Group::discriminator},
       [&](const BoundBundle& b, LossNoise& n) { return discriminator_loss(b, src, unl, binary, n); }},
      {"adversarial", false, {Group::target_encoder, Group::target_classifier},
       [&](const BoundBundle& b, LossNoise& n) { return adversarial_loss(b, unl, lab, w, plain, n); }},
      {"adversarial/binary", true, {Group::target_encoder},
       [&](const BoundBundle& b, LossNoise& n) { return adversarial_loss(b, unl, lab, w, binary, n); }},
      {"target_total", false, {Group::target_encoder, Group::target_classifier},
       [&](const BoundBundle& b, LossNoise& n) { return target_total_loss(b, lab, unl, w, plain, n).total; }},
      {"target_total+decoder", false, {Group::target_encoder, Group::target_classifier, Group::decoder},
       [&](const BoundBundle& b, LossNoise& n) { return target_total_loss(b, lab, unl, w, with_decoder, n).total; }},
  };

  double worst = 0.0;
  std::size_t leaks = 0, checked = 0;
  std::string worst_at;
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    ModelBundle m = oracle::small_bundle(D, K, J, c.binary, seed);
    const auto r = oracle::fd_check(m, c.claimed, c.loss, seed + 1);
    seed += 2;
    checked += r.checked;
    leaks += r.nonzero_in_unclaimed;
    if (r.checked == 0) leaks += 1;
    if (r.max_rel >= worst) {
      worst = r.max_rel;
      worst_at = c.name;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < kFdTol && leaks == 0 && secs < kFdSeconds,
          fmt("%zu losses, %zu entries, worst relative error %.2e in %s (limit %.0e), %zu nonzero unclaimed "
              "gradients, %.1f s (limit %.0f s)",
              cases.size(), checked, worst, worst_at.c_str(), kFdTol, leaks, secs, kFdSeconds)};
}

Outcome gumbel_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(31);
  const Tensor row = rng.uniform({1, kGumbelClasses}, -2, 2);
  Tensor logits(Shape{kGumbelDraws, kGumbelClasses});
  for (std::size_t r = 0; r < kGumbelDraws; ++r) {
    for (std::size_t k = 0; k < kGumbelClasses; ++k) logits.at(r, k) = row.at(0, k);
  }
  const oracle::Row p = oracle::softmax(oracle::row_of(row, 0));
  double worst_z = 0.0;
  for (double tau : {0.5, 3.0, 10.0}) {
    Tape tape;
    const auto draw = sample_gumbel_softmax({tape.constant(logits)}, tau, rng.gumbel({kGumbelDraws, kGumbelClasses}));
    std::vector<double> count(kGumbelClasses, 0.0);
    for (auto h : draw.hard) count[h] += 1.0;
    for (std::size_t k = 0; k < kGumbelClasses; ++k) {
      const double n = static_cast<double>(kGumbelDraws);
      const double sd = std::sqrt(n * p[k] * (1 - p[k]));
      worst_z = std::max(worst_z, std::abs(count[k] - n * p[k]) / sd);
    }
  }
  const double secs = seconds_since(t0);
  return {worst_z <= kGumbelSigmas && secs < kGumbelSeconds,
          fmt("tau in {0.5, 3, 10}, K=%zu, %zu draws each, worst deviation %.2f sd (limit %.0f), %.1f s", kGumbelClasses,
              kGumbelDraws, worst_z, kGumbelSigmas, secs)};
}

Outcome adam_conformance() {
  AdamState st;  // default settings
  const double lr = 0.001, b1 = 0.5, b2 = 0.5, eps = 1e-8;
  Tensor p = Tensor::vector({1.0, -0.5, 3.0});
  std::vector<double> x{1.0, -0.5, 3.0}, m(3, 0.0), v(3, 0.0);
  for (int t = 1; t <= 10; ++t) {
    Tensor g(p.shape());
    for (std::size_t i = 0; i < 3; ++i) {
      g[i] = 2.0 * p[i];
      const double gi = 2.0 * x[i];
      m[i] = b1 * m[i] + (1 - b1) * gi;
      v[i] = b2 * v[i] + (1 - b2) * gi * gi;
      x[i] -= lr * (m[i] / (1 - std::pow(b1, t))) / (std::sqrt(v[i] / (1 - std::pow(b2, t))) + eps);
    }
    Tensor* params[] = {&p};
    adam_step(st, params, std::vector<Tensor>{g});
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(p[i] - x[i]));
  const bool settings = st.settings.learning_rate == lr && st.settings.beta1 == b1 && st.settings.beta2 == b2;
  return {worst <= kAdamTol && settings,
          fmt("10 iterates on x^2, max deviation %.1e (limit %.0e), lr=%g beta1=%g beta2=%g", worst, kAdamTol,
              st.settings.learning_rate, st.settings.beta1, st.settings.beta2)};
}

struct Benchmark {
  ExperimentConfig cfg;
  DomainPair data;
  ModelBundle source_model;
  double source_seconds = 0.0;
};

Benchmark train_benchmark(const ExperimentConfig& cfg) {
  Benchmark b{cfg, gen_preset(cfg.dataset, cfg.seed), {}, 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  b.source_model = train_source(cfg, b.data.source).model;
  b.source_seconds = seconds_since(t0);
  return b;
}

std::vector<ShotsRow> curve(const Benchmark& b, const ExperimentConfig& cfg, std::vector<std::size_t> shots) {
  return run_shots_curve(cfg, b.source_model, b.data.source, b.data.target, shots, kBenchSeeds);
}

double source_only(const Benchmark& b) {
  const Tensor x = b.source_model.scaler.apply(b.data.target.features);
  const auto pred = predict_class(b.source_model.source_encoder, b.source_model.source_classifier, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == (*b.data.target.labels)[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += fmt(i ? ", %.4f" : "%.4f", v[i]);
  return s;
}

void check_phase(std::vector<std::string>& problems, const std::string& what, const ModelBundle& before,
                 const ModelBundle& after, const std::set<Group>& allowed, const std::set<Group>& required) {
  for (Group g : kAllGroups) {
    const bool moved = hash_group(before, g) != hash_group(after, g);
    if (moved && !allowed.count(g)) problems.push_back(what + " touched " + std::string(to_string(g)));
    if (!moved && required.count(g)) problems.push_back(what + " left " + std::string(to_string(g)) + " unchanged");
  }
}

Outcome phase_isolation() {
  ExperimentConfig cfg;
  cfg.classes = 3;
  cfg.latent_dim = 4;
  cfg.hidden = {8};
  cfg.source_epochs = 2;
  cfg.adaptation_epochs = 1;
  cfg.seed = 9;
  const auto data = gen_preset("rotated-blobs-small", 9);
  std::vector<std::string> problems;

  const ModelBundle init = ModelBundle::init(cfg.bundle_shape(2), cfg.prior_radius, cfg.prior_init_sigma, cfg.seed);
  const auto src = train_source(cfg, data.source);
  check_phase(problems, "source phase", init, src.model,
              {Group::source_encoder, Group::source_classifier, Group::decoder, Group::prior},
              {Group::source_encoder, Group::source_classifier, Group::decoder, Group::prior});

  for (bool target_decoder : {false, true}) {
    ExperimentConfig c = cfg;
    c.ablation.target_decoder = target_decoder;
    ModelBundle m = src.model;
    m.warm_start_target();
    OptimizerSet opt;
    AdaptationTrainer t(c, m, opt);
    const Batch s{m.scaler.apply(data.source.features), {}};
    Batch sl = s;
    for (auto y : *data.source.labels) sl.labels.push_back(static_cast<int>(y));
    const DomainDataset lab_ds = data.target.subset({0, 150, 300});
    Batch lab{m.scaler.apply(lab_ds.features), {}};
    for (auto y : *lab_ds.labels) lab.labels.push_back(static_cast<int>(y));
    const Batch unl{m.scaler.apply(data.target.features), {}};
    const std::string tag = target_decoder ? " (target decoder)" : "";
    for (int i = 0; i < 3; ++i) {
      ModelBundle before = m;
      t.discriminator_step(sl, unl, 10 + i);
      check_phase(problems, "discriminator step" + tag, before, m, {Group::discriminator}, {Group::discriminator});
      before = m;
      t.target_step(lab, unl, 20 + i);
      std::set<Group> psi{Group::target_encoder, Group::target_classifier};
      if (target_decoder) psi.insert(Group::decoder);
      check_phase(problems, "target step" + tag, before, m, psi, psi);
    }
  }

  {
    ExperimentConfig c = cfg;
    c.shots = 1;
    const auto split = make_few_shot_split(data.target, 1, 3);
    const auto run = train_adaptation(c, src.model, data.source, data.target, split, 3);
    check_phase(problems, "adaptation phase", src.model, run.model,
                {Group::target_encoder, Group::target_classifier, Group::discriminator},
                {Group::target_encoder, Group::target_classifier, Group::discriminator});
  }

  std::string detail = problems.empty() ? "source phase, discriminator steps, target steps (with and without "
                                          "target decoder) and a full adaptation run audited"
                                        : problems.front();
  if (problems.size() > 1) detail += fmt(" (and %zu more)", problems.size() - 1);
  return {problems.empty(), detail};
}

Outcome cli_determinism(const std::string& cli, const fs::path& configs) {
  const fs::path dir = fs::temp_directory_path() / "avda_acceptance_determinism";
  fs::remove_all(dir);
  auto run = [&](const std::string& sub) {
    const std::string cmd = "'" + cli + "' shots-curve --config '" + (configs / "smoke.conf").string() +
                            "' --set source_epochs=60 --shots 0,1,5 --seeds 2 --out '" + (dir / sub).string() +
                            "' > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  if (run("a") != 0 || run("b") != 0) return {false, "shots-curve exited with an error"};
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(dir / "a" / "shots_curve.csv"), b = slurp(dir / "b" / "shots_curve.csv");
  return {!a.empty() && a == b, fmt("two shots-curve executions, %zu-byte CSVs %s", a.size(),
                                    a == b ? "byte-identical" : "differ")};
}

} // namespace

int main(int argc, char** argv) {
  std::string cli = AVDA_CLI_PATH;
  fs::path configs = AVDA_CONFIG_DIR;
  fs::path reference = fs::path(AVDA_ACCEPTANCE_DIR) / "reference.json";
  std::string write_reference;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--write-reference" && i + 1 < argc) {
      write_reference = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    } else {
      std::fprintf(stderr, "usage: %s [--only 1,2,...] [--write-reference path]\n", argv[0]);
      return 2;
    }
  }
  auto wanted = [&](int c) { return only.empty() || only.count(c); };

  nlohmann::json ref;
  if (std::ifstream in(reference); in) ref = nlohmann::json::parse(in, nullptr, false);

  int failures = 0;
  auto report = [&](int id, const char* title, const Outcome& o) {
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };

  if (wanted(1)) report(1, "analytic KL against Monte Carlo", analytic_kl());
  if (wanted(2)) report(2, "finite-difference gradient suite", gradient_suite());
  if (wanted(3)) report(3, "Gumbel-max class frequencies", gumbel_exactness());
  if (wanted(4)) report(4, "Adam conformance", adam_conformance());

  nlohmann::json measured;
  if (wanted(5) || wanted(6) || wanted(7)) {
    const ExperimentConfig cfg = load_config(configs / "benchmark.conf");
    const auto t0 = std::chrono::steady_clock::now();
    const Benchmark bench = train_benchmark(cfg);
    const double baseline = source_only(bench);
    const auto uda = curve(bench, cfg, {0});
    const double uda_seconds = seconds_since(t0);
    const double gain = uda[0].mean_accuracy - baseline;
    measured["source_only_accuracy"] = baseline;
    measured["uda_accuracies"] = uda[0].accuracies;
    measured["uda_mean_accuracy"] = uda[0].mean_accuracy;
    std::string ref_note;
    if (ref.is_object() && ref.contains("uda_mean_accuracy")) {
      ref_note = fmt("; reference run %.4f vs %.4f", ref["uda_mean_accuracy"].get<double>(),
                     ref["source_only_accuracy"].get<double>());
    }
    if (wanted(5)) {
      report(5, "adaptation benefit (0-shot)",
             {gain >= kUdaGain && uda_seconds < kUdaSeconds,
              fmt("adapted %.4f vs source-only %.4f over %zu seeds, gain %.4f (needs %.2f), %.0f s (limit %.0f s)%s",
                  uda[0].mean_accuracy, baseline, kBenchSeeds, gain, kUdaGain, uda_seconds, kUdaSeconds,
                  ref_note.c_str())});
    }

    if (wanted(6)) {
      const auto t1 = std::chrono::steady_clock::now();
      auto rows = uda;
      for (const auto& r : curve(bench, cfg, {1, 5, 10})) rows.push_back(r);
      const double secs = seconds_since(t1) + uda_seconds;
      bool monotone = true;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const double slack = pooled_sd(rows[i - 1].accuracies, rows[i].accuracies);
        if (rows[i].mean_accuracy < rows[i - 1].mean_accuracy - slack) monotone = false;
      }
      const bool speedup = rows[2].mean_accuracy > rows[0].mean_accuracy;
      std::vector<double> means;
      for (const auto& r : rows) means.push_back(r.mean_accuracy);
      measured["shots"] = {0, 1, 5, 10};
      measured["shots_mean_accuracy"] = means;
      report(6, "few-shot speed-up",
             {monotone && speedup && secs < kShotsSeconds,
              fmt("means at shots 0,1,5,10: %s; non-decreasing within pooled sd: %s; 5-shot > 0-shot: %s; %.0f s "
                  "(limit %.0f s)",
                  join(means).c_str(), monotone ? "yes" : "no", speedup ? "yes" : "no", secs, kShotsSeconds)});
    }

    if (wanted(7)) {
      ExperimentConfig fixed = cfg;
      fixed.ablation.fixed_priors = true;
      const Benchmark fixed_bench = train_benchmark(fixed);
      const auto fixed_row = curve(fixed_bench, fixed, {0})[0];
      ExperimentConfig bin = cfg;
      bin.ablation.binary_discriminator = true;
      const auto bin_row = curve(bench, bin, {0})[0];
      const double tie_fixed = std::max(kTieFloor, pooled_sd(uda[0].accuracies, fixed_row.accuracies));
      const double tie_bin = std::max(kTieFloor, pooled_sd(uda[0].accuracies, bin_row.accuracies));
      const bool ok_fixed = fixed_row.mean_accuracy <= uda[0].mean_accuracy + tie_fixed;
      const bool ok_bin = bin_row.mean_accuracy <= uda[0].mean_accuracy + tie_bin;
      measured["fixed_priors_mean_accuracy"] = fixed_row.mean_accuracy;
      measured["binary_discriminator_mean_accuracy"] = bin_row.mean_accuracy;
      report(7, "ablation ordering",
             {ok_fixed && ok_bin,
              fmt("full %.4f; fixed priors %.4f (tie band %.4f, %s); binary discriminator %.4f (tie band %.4f, %s)",
                  uda[0].mean_accuracy, fixed_row.mean_accuracy, tie_fixed, ok_fixed ? "ok" : "above",
                  bin_row.mean_accuracy, tie_bin, ok_bin ? "ok" : "above")});
    }
  }

  if (wanted(8)) report(8, "shots-curve determinism", cli_determinism(cli, configs));
  if (wanted(9)) report(9, "phase isolation", phase_isolation());

  if (!write_reference.empty()) {
    measured["config"] = "benchmark.conf";
    measured["seeds"] = kBenchSeeds;
    std::ofstream(write_reference) << measured.dump(2) << "\n";
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
