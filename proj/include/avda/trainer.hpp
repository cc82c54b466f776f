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
#include <map>
#include <optional>
#include <vector>

#include "avda/config.hpp"
#include "avda/data.hpp"
#include "avda/losses.hpp"
#include "avda/networks.hpp"
#include "avda/optim.hpp"

namespace avda {

/// One Adam state per parameter group, created on first use.
struct OptimizerSet {
  std::map<Group, AdamState> states;

  AdamState& for_group(Group g, const AdamSettings& settings);
};

/// Applies one Adam step to every group in `groups` using gradients
/// collected from `bound`.
void apply_gradients(ModelBundle& model, OptimizerSet& optim, const AdamSettings& settings,
                     const BoundBundle& bound, const Gradients& grads, std::span<const Group> groups,
                     bool learn_class_weights);

/// Throws NumericError when any parameter is NaN/Inf.
void check_finite(const ModelBundle& model, std::string_view context);

/// Source phase, one minibatch at a time: minimizes the source objective over
/// the source encoder and classifier, the decoder and (unless fixed_priors)
/// the prior means and variances.
class SourceTrainer {
public:
  SourceTrainer(const ExperimentConfig& cfg, ModelBundle& model, OptimizerSet& optim);

  /// Returns the minibatch loss before the update.
  double step(const Batch& batch, std::uint64_t noise_seed);

  const std::vector<Group>& trainable() const { return groups_; }

private:
  const ExperimentConfig& cfg_;
  ModelBundle& model_;
  OptimizerSet& optim_;
  std::vector<Group> groups_;
};

struct TargetStepLosses {
  double total = 0.0;
  std::optional<double> supervised;
  std::optional<double> unsupervised;
  double adversarial = 0.0;
  std::optional<double> reconstruction;
};

/// Adaptation phase steps. A discriminator step moves only the
/// discriminator; a target step moves only the target encoder and
/// classifier (plus the decoder under target_decoder and the prior when
/// train_prior_on_target is set without fixed_priors).
class AdaptationTrainer {
public:
  AdaptationTrainer(const ExperimentConfig& cfg, ModelBundle& model, OptimizerSet& optim);

  double discriminator_step(const Batch& source, const Batch& target, std::uint64_t noise_seed);
  TargetStepLosses target_step(const Batch& labeled, const Batch& unlabeled,
                               std::uint64_t noise_seed);

  const std::vector<Group>& target_groups() const { return target_groups_; }

private:
  const ExperimentConfig& cfg_;
  ModelBundle& model_;
  OptimizerSet& optim_;
  LossOptions options_;
  std::vector<Group> target_groups_;
};

struct SourceEpoch {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct AdaptationEpoch {
  std::size_t epoch = 0;
  std::optional<double> target_accuracy;
  std::optional<double> supervised;
  std::optional<double> unsupervised;
  double adversarial = 0.0;
  double discriminator = 0.0;
  std::optional<double> reconstruction;
};

struct SourceRun {
  ModelBundle model;
  OptimizerSet optim;
  std::vector<SourceEpoch> epochs;
};

/// Fits the input scaler on `source`, then runs cfg.source_epochs epochs of
/// shuffled minibatch training.
SourceRun train_source(const ExperimentConfig& cfg, const DomainDataset& source);

struct AdaptationRun {
  ModelBundle model;
  OptimizerSet optim;
  std::vector<AdaptationEpoch> epochs;
  /// Source encoder and classifier applied to the evaluation pool.
  std::optional<double> source_only_accuracy;
  std::optional<double> final_accuracy;
};

/// Warm-starts the target side from the trained source side, re-initializes
/// the discriminator from `seed`, and alternates d_steps_per_t_step
/// discriminator steps with one target step for cfg.adaptation_epochs
/// epochs. The evaluation pool is `split.unlabeled_indices`; accuracies are
/// reported when the target carries labels.
AdaptationRun train_adaptation(const ExperimentConfig& cfg, const ModelBundle& source_model,
                               const DomainDataset& source, const DomainDataset& target,
                               const FewShotSplit& split, std::uint64_t seed);

/// Versioned binary checkpoint: parameters, prior, scaler, Adam state and the
/// canonical config (whose digest is checked on load).
struct Checkpoint {
  ExperimentConfig config;
  ModelBundle model;
  OptimizerSet optim;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint checkpoint_load(const std::filesystem::path& path);
std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& ckpt);

} // namespace avda
