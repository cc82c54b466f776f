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
#include <optional>
#include <vector>

#include "avda/networks.hpp"

namespace avda {

/// Objective weights. Defaults are the published settings.
struct LossWeights {
  double alpha_s = 1000.0;  // source classification weight
  double alpha_t = 10.0;    // target classification weight
  double gamma = 0.9;       // labeled vs unlabeled target mix
  double tau = 3.0;         // Gumbel-softmax temperature

  void validate() const;
};

struct LossOptions {
  /// Let target-phase losses move the prior (frozen by default).
  bool train_prior_on_target = false;
  /// Two-class source/target discriminator instead of K+1 classes.
  bool binary_discriminator = false;
  /// Add target reconstruction to the target objective (reaches the decoder).
  bool target_decoder = false;
};

/// Minibatch of already-scaled features. `labels` is either empty (all
/// unlabeled) or one entry per row, -1 marking an unlabeled row.
struct Batch {
  Tensor x;
  std::vector<int> labels;

  std::size_t size() const { return x.rank() == 2 ? x.rows() : 0; }
  bool empty() const { return size() == 0; }
  bool fully_labeled() const;
  bool any_labeled() const;
  std::vector<std::size_t> label_indices() const;
};

/// Noise source for one loss evaluation: independent Gaussian and Gumbel
/// streams derived from one seed.
///
/// For gradient checking, a recording pass stores every Gumbel hard choice
/// and the soft value used as the straight-through anchor; `replay()` yields
/// a fresh stream that reuses them. Under replay a loss is a smooth function
/// of the parameters whose exact gradient equals the straight-through
/// gradient at the recorded point.
class LossNoise {
public:
  explicit LossNoise(std::uint64_t seed);

  Tensor gaussian(const Shape& shape);

  struct GumbelDraw {
    GumbelSoftmaxSample sample;
    /// Forward: one-hot of sample.hard. Backward: gradient of sample.soft.
    Var one_hot;
  };
  GumbelDraw gumbel_softmax(const Var& logits, double tau);

  void start_recording();
  LossNoise replay() const;

private:
  enum class Mode { free, record, replay };
  struct Pin {
    std::vector<std::size_t> hard;
    Tensor anchor;
  };

  std::uint64_t seed_;
  Rng gaussian_;
  Rng gumbel_;
  Mode mode_ = Mode::free;
  std::vector<Pin> pins_;
  std::size_t cursor_ = 0;
};

/// -log p(x | z) per row for a unit-variance Gaussian likelihood:
/// 1/2 ||x - decode(z)||^2 + D/2 log(2 pi).
Var reconstruction_nll(const BoundMlp& decoder, const Var& x, const Var& z);

/// Mean over the batch of KL(q_phi(z|x) || p(z|y)) - log p_theta(x|z) -
/// alpha_s log q_phi(y|x), one reparameterized z per row. Reaches the source
/// encoder and classifier, the decoder and the prior (when bound tracked).
Var source_supervised_loss(const BoundBundle& b, const Batch& batch, const LossWeights& w,
                           LossNoise& noise);

/// Mean of KL(q_psi(z|x) || p*(z|y)) - alpha_t log q_psi(y|x). Reaches the
/// target encoder and classifier; the prior only with train_prior_on_target.
Var target_supervised_loss(const BoundBundle& b, const Batch& batch, const LossWeights& w,
                           const LossOptions& opt, LossNoise& noise);

/// Mean of KL(q_psi(y|z) || pi) + KL(q_psi(z|x) || p*(z|y~)), where y~ is a
/// hard Gumbel-softmax draw at temperature tau, both at one shared z sample.
Var target_unsupervised_loss(const BoundBundle& b, const Batch& batch, const LossWeights& w,
                             const LossOptions& opt, LossNoise& noise);

/// Cross-entropy of the discriminator on detached source embeddings (true
/// class) and detached target embeddings (fake class K), averaged over all
/// rows. Reaches the discriminator only. Under binary_discriminator the
/// labels are source = 0, target = 1.
Var discriminator_loss(const BoundBundle& b, const Batch& source, const Batch& target,
                       const LossOptions& opt, LossNoise& noise);

/// Cross-entropy of the frozen discriminator on target embeddings against a
/// Gumbel-softmax class draw (unlabeled rows) or the true class (labeled
/// rows), averaged over all rows. Reaches the target encoder and classifier
/// only. Under binary_discriminator every target row is labeled 0 (source).
Var adversarial_loss(const BoundBundle& b, const Batch& unlabeled, const Batch& labeled,
                     const LossWeights& w, const LossOptions& opt, LossNoise& noise);

struct TargetLoss {
  Var total;
  std::optional<Var> supervised;
  std::optional<Var> unsupervised;
  Var adversarial;
  std::optional<Var> reconstruction;
};

/// gamma L_sup + (1 - gamma) L_unsup + L_A (+ target reconstruction under
/// target_decoder). Terms whose batch is empty are dropped without
/// renormalizing gamma. Noise is consumed in that term order.
TargetLoss target_total_loss(const BoundBundle& b, const Batch& labeled, const Batch& unlabeled,
                             const LossWeights& w, const LossOptions& opt, LossNoise& noise);

} // namespace avda
