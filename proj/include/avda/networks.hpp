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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "avda/autodiff.hpp"
#include "avda/data.hpp"
#include "avda/distributions.hpp"
#include "avda/gmm_prior.hpp"
#include "avda/rng.hpp"

namespace avda {

enum class Activation { tanh, relu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

struct MlpHead {
  std::string name;
  std::size_t width = 0;
};

/// Fully connected trunk followed by linear output heads.
struct MlpSpec {
  std::size_t input_width = 0;
  std::vector<std::size_t> hidden;
  Activation activation = Activation::tanh;
  std::vector<MlpHead> heads;

  void validate() const;
};

/// Parameters of one MLP, laid out as W0, b0, ..., W_{L-1}, b_{L-1} for the
/// trunk followed by (W, b) per head. Weights are [in x out].
struct Mlp {
  MlpSpec spec;
  std::vector<Tensor> params;

  /// Xavier-uniform weights, zero biases.
  static Mlp init(MlpSpec spec, Rng& rng);
  /// All-zero parameters.
  static Mlp zeros(MlpSpec spec);
};

struct BoundMlp {
  const MlpSpec* spec = nullptr;
  std::vector<Var> params;
};

BoundMlp bind_mlp(Tape& tape, const Mlp& mlp, bool tracked);
/// The same parameter values as untracked constants.
BoundMlp detached(const BoundMlp& mlp);

/// One output per head, in head order.
std::vector<Var> forward(const BoundMlp& mlp, const Var& x);

/// Parameter groups of a model bundle. The source side (phi) is the source
/// encoder plus its latent classifier; the target side (psi) likewise.
enum class Group : std::uint8_t {
  source_encoder,
  source_classifier,
  decoder,
  target_encoder,
  target_classifier,
  discriminator,
  prior,
};

inline constexpr std::array<Group, 7> kAllGroups = {
    Group::source_encoder, Group::source_classifier, Group::decoder, Group::target_encoder,
    Group::target_classifier, Group::discriminator, Group::prior};

std::string_view to_string(Group g);

/// Architecture of a bundle.
struct BundleShape {
  std::size_t input_dim = 0;
  std::size_t classes = 0;
  std::size_t latent_dim = 20;
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::tanh;
  bool binary_discriminator = false;

  std::size_t discriminator_classes() const { return binary_discriminator ? 2 : classes + 1; }
};

/// Every parameterized function of the model plus the prior and the input
/// scaler fitted on source data.
struct ModelBundle {
  BundleShape shape;
  Mlp source_encoder;
  Mlp target_encoder;
  Mlp decoder;
  Mlp source_classifier;
  Mlp target_classifier;
  Mlp discriminator;
  GmmPrior prior;
  FeatureScaler scaler;

  /// Seeded initialization; the target side starts as a copy of the source
  /// side.
  static ModelBundle init(const BundleShape& shape, double prior_radius, double prior_sigma,
                          std::uint64_t seed);

  std::vector<Tensor*> group(Group g);
  std::vector<const Tensor*> group(Group g) const;

  /// Copies source encoder and classifier parameters onto the target side.
  void warm_start_target();
};

/// FNV-1a hash over the raw bytes of a parameter group.
std::uint64_t hash_group(const ModelBundle& bundle, Group g);

/// A bundle recorded on a tape. Groups listed in `tracked` become leaves.
struct BoundBundle {
  const ModelBundle* model = nullptr;
  BoundMlp source_encoder;
  BoundMlp target_encoder;
  BoundMlp decoder;
  BoundMlp source_classifier;
  BoundMlp target_classifier;
  BoundMlp discriminator;
  BoundPrior prior;
  std::array<bool, kAllGroups.size()> tracked{};

  bool is_tracked(Group g) const { return tracked[static_cast<std::size_t>(g)]; }
  std::vector<Var> group_vars(Group g) const;
};

BoundBundle bind_bundle(Tape& tape, const ModelBundle& bundle, std::span<const Group> tracked);

DiagonalGaussian encode(const BoundMlp& encoder, const Var& x);
Var classify_latent(const BoundMlp& classifier, const Var& z);
Var decode(const BoundMlp& decoder, const Var& z);
Var discriminate(const BoundMlp& discriminator, const Var& z);

enum class PredictMode { mean_z, sampled_z };

/// argmax of classifier(encoder(x)) at z = mu (mean_z) or one reparameterized
/// sample (sampled_z, which draws from `rng`). `x` must already be scaled.
std::vector<std::size_t> predict_class(const Mlp& encoder, const Mlp& classifier, const Tensor& x,
                                       PredictMode mode = PredictMode::mean_z,
                                       Rng* rng = nullptr);

/// Posterior means of an encoder for already-scaled inputs.
Tensor encode_means(const Mlp& encoder, const Tensor& x);

} // namespace avda
