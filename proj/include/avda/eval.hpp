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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "avda/config.hpp"
#include "avda/data.hpp"
#include "avda/networks.hpp"
#include "avda/trainer.hpp"

namespace avda {

/// Fraction of mean_z predictions that match the labels. Source-domain data
/// goes through the source encoder and classifier, target-domain data through
/// the target side. Throws ContractError on unlabeled data.
double evaluate_accuracy(const ModelBundle& bundle, const DomainDataset& ds);

struct RunReport {
  std::uint64_t config_digest = 0;
  std::uint64_t seed = 0;
  std::size_t shots = 0;
  std::vector<SourceEpoch> source_epochs;
  std::vector<AdaptationEpoch> adaptation_epochs;
  std::optional<double> source_only_accuracy;
  std::optional<double> final_accuracy;
  double wall_clock_seconds = 0.0;

  bool operator==(const RunReport&) const;
};

/// Pretty-printed JSON, keys sorted. Absent values are written as null.
std::string report_to_json(const RunReport& report);
/// Throws FormatError on malformed input.
RunReport report_from_json(std::string_view text);

struct ShotsRow {
  std::size_t shots = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;   // sample standard deviation; 0 for one seed
  double best_accuracy = 0.0;
  std::vector<double> accuracies;  // one per seed, in seed order
};

/// Seed i of every grid point uses the same split and adaptation seeds, both
/// derived from cfg.seed, so grid points differ only in the label budget.
std::uint64_t curve_seed(const ExperimentConfig& cfg, std::size_t index);

/// One fresh split and adaptation per (shots, seed) from the shared source
/// model. Runs fan out over cfg.threads workers; rows come back in grid order.
std::vector<ShotsRow> run_shots_curve(const ExperimentConfig& cfg, const ModelBundle& source_model,
                                      const DomainDataset& source, const DomainDataset& target,
                                      std::span<const std::size_t> shots_grid, std::size_t n_seeds);

/// Header `shots,mean_accuracy,std_accuracy,best_accuracy,n_seeds`.
std::string shots_curve_csv(std::span<const ShotsRow> rows);

/// Posterior means (mean_z) of every sample: columns z0..z{J-1}, label (-1
/// when unknown), domain.
std::string embeddings_csv(const ModelBundle& bundle, const DomainDataset& ds);
void export_embeddings(const ModelBundle& bundle, const DomainDataset& ds,
                       const std::filesystem::path& path);

/// Parses "0,1,5"; throws ValidationError on empty or malformed lists.
std::vector<std::size_t> parse_shots_grid(std::string_view text);

} // namespace avda
