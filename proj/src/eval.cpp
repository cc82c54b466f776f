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

#include "avda/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "avda/error.hpp"
#include "avda/rng.hpp"

namespace avda {

using nlohmann::json;

double evaluate_accuracy(const ModelBundle& bundle, const DomainDataset& ds) {
  if (!ds.labeled()) throw ContractError("evaluate_accuracy: dataset has no labels");
  if (ds.size() == 0) throw ContractError("evaluate_accuracy: empty dataset");
  const Tensor x = bundle.scaler.apply(ds.features);
  const bool source = ds.domain == Domain::source;
  const auto predicted = predict_class(source ? bundle.source_encoder : bundle.target_encoder,
                                       source ? bundle.source_classifier : bundle.target_classifier, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == (*ds.labels)[i];
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

bool RunReport::operator==(const RunReport& o) const {
  auto same_source = [](const SourceEpoch& a, const SourceEpoch& b) {
    return a.epoch == b.epoch && a.loss == b.loss && a.accuracy == b.accuracy;
  };
  auto same_adapt = [](const AdaptationEpoch& a, const AdaptationEpoch& b) {
    return a.epoch == b.epoch && a.target_accuracy == b.target_accuracy &&
           a.supervised == b.supervised && a.unsupervised == b.unsupervised &&
           a.adversarial == b.adversarial && a.discriminator == b.discriminator &&
           a.reconstruction == b.reconstruction;
  };
  return config_digest == o.config_digest && seed == o.seed && shots == o.shots &&
         std::equal(source_epochs.begin(), source_epochs.end(), o.source_epochs.begin(),
                    o.source_epochs.end(), same_source) &&
         std::equal(adaptation_epochs.begin(), adaptation_epochs.end(),
                    o.adaptation_epochs.begin(), o.adaptation_epochs.end(), same_adapt) &&
         source_only_accuracy == o.source_only_accuracy && final_accuracy == o.final_accuracy &&
         wall_clock_seconds == o.wall_clock_seconds;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

} // namespace

std::string report_to_json(const RunReport& r) {
  json src = json::array();
  for (const auto& e : r.source_epochs) {
    src.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}});
  }
  json adapt = json::array();
  for (const auto& e : r.adaptation_epochs) {
    adapt.push_back({{"epoch", e.epoch},
                     {"target_accuracy", opt(e.target_accuracy)},
                     {"supervised", opt(e.supervised)},
                     {"unsupervised", opt(e.unsupervised)},
                     {"adversarial", e.adversarial},
                     {"discriminator", e.discriminator},
                     {"reconstruction", opt(e.reconstruction)}});
  }
  json j = {{"config_digest", digest_hex(r.config_digest)},
            {"seed", r.seed},
            {"shots", r.shots},
            {"source_epochs", std::move(src)},
            {"adaptation_epochs", std::move(adapt)},
            {"source_only_accuracy", opt(r.source_only_accuracy)},
            {"final_accuracy", opt(r.final_accuracy)},
            {"wall_clock_seconds", r.wall_clock_seconds}};
  return j.dump(2) + "\n";
}

RunReport report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    RunReport r;
    r.config_digest = std::stoull(j.at("config_digest").get<std::string>(), nullptr, 16);
    r.seed = j.at("seed").get<std::uint64_t>();
    r.shots = j.at("shots").get<std::size_t>();
    for (const auto& e : j.at("source_epochs")) {
      r.source_epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("loss").get<double>(),
                                 e.at("accuracy").get<double>()});
    }
    for (const auto& e : j.at("adaptation_epochs")) {
      AdaptationEpoch a;
      a.epoch = e.at("epoch").get<std::size_t>();
      a.target_accuracy = get_opt(e, "target_accuracy");
      a.supervised = get_opt(e, "supervised");
      a.unsupervised = get_opt(e, "unsupervised");
      a.adversarial = e.at("adversarial").get<double>();
      a.discriminator = e.at("discriminator").get<double>();
      a.reconstruction = get_opt(e, "reconstruction");
      r.adaptation_epochs.push_back(a);
    }
    r.source_only_accuracy = get_opt(j, "source_only_accuracy");
    r.final_accuracy = get_opt(j, "final_accuracy");
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("run report: ") + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("run report: bad config digest: ") + e.what());
  }
}

std::uint64_t curve_seed(const ExperimentConfig& cfg, std::size_t index) {
  return derive_seed(cfg.seed, "seed-" + std::to_string(index));
}

std::vector<ShotsRow> run_shots_curve(const ExperimentConfig& cfg, const ModelBundle& source_model,
                                      const DomainDataset& source, const DomainDataset& target,
                                      std::span<const std::size_t> shots_grid, std::size_t n_seeds) {
  if (shots_grid.empty()) throw ValidationError("shots grid is empty");
  if (n_seeds == 0) throw ValidationError("number of seeds must be at least 1");
  if (!target.labeled()) throw ContractError("shots curve needs a labeled target set for evaluation");

  struct Job {
    std::size_t shots;
    std::size_t seed_index;
    double accuracy = 0.0;
    std::exception_ptr error;
  };
  std::vector<Job> jobs;
  for (auto s : shots_grid) {
    for (std::size_t i = 0; i < n_seeds; ++i) jobs.push_back({s, i, 0.0, nullptr});
  }

  auto run_one = [&](Job& job) {
    try {
      ExperimentConfig run_cfg = cfg;
      run_cfg.shots = job.shots;
      const std::uint64_t seed = curve_seed(cfg, job.seed_index);
      const auto split = make_few_shot_split(target, job.shots, seed);
      if (split.unlabeled_indices.empty()) {
        throw ValidationError("shots " + std::to_string(job.shots) +
                              " leaves no unlabeled target samples to evaluate on");
      }
      const auto run = train_adaptation(run_cfg, source_model, source, target, split, seed);
      job.accuracy = *run.final_accuracy;
    } catch (...) {
      job.error = std::current_exception();
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, jobs.size());
  if (workers == 1) {
    for (auto& job : jobs) run_one(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) run_one(jobs[i]);
      });
    }
  }
  for (const auto& job : jobs) {
    if (job.error) std::rethrow_exception(job.error);
  }

  std::vector<ShotsRow> rows;
  for (std::size_t g = 0; g < shots_grid.size(); ++g) {
    ShotsRow row;
    row.shots = shots_grid[g];
    for (std::size_t i = 0; i < n_seeds; ++i) row.accuracies.push_back(jobs[g * n_seeds + i].accuracy);
    double sum = 0.0;
    for (double a : row.accuracies) sum += a;
    row.mean_accuracy = sum / static_cast<double>(n_seeds);
    double ss = 0.0;
    for (double a : row.accuracies) ss += (a - row.mean_accuracy) * (a - row.mean_accuracy);
    row.std_accuracy = n_seeds > 1 ? std::sqrt(ss / static_cast<double>(n_seeds - 1)) : 0.0;
    row.best_accuracy = *std::max_element(row.accuracies.begin(), row.accuracies.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string shots_curve_csv(std::span<const ShotsRow> rows) {
  std::string out = "shots,mean_accuracy,std_accuracy,best_accuracy,n_seeds\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.10f,%.10f,%.10f,%zu\n", r.shots, r.mean_accuracy,
                  r.std_accuracy, r.best_accuracy, r.accuracies.size());
    out += buf;
  }
  return out;
}

std::string embeddings_csv(const ModelBundle& bundle, const DomainDataset& ds) {
  const bool source = ds.domain == Domain::source;
  const Tensor z = encode_means(source ? bundle.source_encoder : bundle.target_encoder,
                                bundle.scaler.apply(ds.features));
  std::string out;
  for (std::size_t j = 0; j < z.cols(); ++j) out += "z" + std::to_string(j) + ",";
  out += "label,domain\n";
  char buf[40];
  const std::string tag(to_string(ds.domain));
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (double v : z.row(r)) {
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      out += buf;
    }
    out += ds.labels ? std::to_string((*ds.labels)[r]) : std::string("-1");
    out += "," + tag + "\n";
  }
  return out;
}

void export_embeddings(const ModelBundle& bundle, const DomainDataset& ds,
                       const std::filesystem::path& path) {
  const std::string text = embeddings_csv(bundle, ds);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f.flush()) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::size_t> parse_shots_grid(std::string_view text) {
  std::vector<std::size_t> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                            : comma - start);
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size()) {
      throw ValidationError("shots grid: '" + std::string(item) + "' is not a non-negative integer");
    }
    grid.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return grid;
}

} // namespace avda
