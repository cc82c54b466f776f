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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "avda/losses.hpp"
#include "avda/networks.hpp"

namespace avda {

struct AdamSettings {
  double learning_rate = 0.001;
  double beta1 = 0.5;
  double beta2 = 0.5;
  double epsilon = 1e-8;
};

struct AblationFlags {
  bool fixed_priors = false;          // prior never trained
  bool binary_discriminator = false;  // source-vs-target discriminator
  bool target_decoder = false;        // target reconstruction term
};

/// Every knob of a run. Defaults reproduce the published hyperparameters;
/// epoch budgets and network widths are desk-scale choices.
struct ExperimentConfig {
  LossWeights weights;
  std::size_t classes = 10;
  std::size_t latent_dim = 20;
  double prior_radius = 10.0;
  double prior_init_sigma = 1.0;
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::tanh;
  std::size_t batch_size = 128;
  std::size_t source_epochs = 100;
  std::size_t adaptation_epochs = 200;
  std::size_t d_steps_per_t_step = 1;
  std::uint64_t seed = 0;
  std::size_t shots = 0;
  AblationFlags ablation;
  bool learn_class_weights = false;
  bool train_prior_on_target = false;
  AdamSettings adam;
  /// Generator preset used when no data files are given.
  std::string dataset = "rotated-blobs";
  std::size_t threads = 1;

  /// Throws ValidationError naming the offending key.
  void validate() const;

  BundleShape bundle_shape(std::size_t input_dim) const;
  LossOptions loss_options() const;
};

/// Sets one key from its textual value. Unknown keys and malformed values
/// throw ValidationError naming the key.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const ExperimentConfig& cfg, std::string_view key);
std::vector<std::string> config_keys();

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
/// Keys absent from the text keep their defaults.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical serialization: every key, sorted, one `key = value` per line.
/// parse_config(to_config_text(c)) reproduces c exactly.
std::string to_config_text(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical text.
std::uint64_t config_digest(const ExperimentConfig& cfg);
std::string digest_hex(std::uint64_t digest);

} // namespace avda
