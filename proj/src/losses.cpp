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

#include "avda/losses.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "avda/error.hpp"

namespace avda {

void LossWeights::validate() const {
  if (!(alpha_s >= 0.0)) throw ParameterError("alpha_s must be >= 0");
  if (!(alpha_t >= 0.0)) throw ParameterError("alpha_t must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0, 1]");
  if (!(tau > 0.0)) throw ParameterError("tau must be > 0");
}

bool Batch::fully_labeled() const {
  if (labels.size() != size()) return false;
  for (int l : labels) {
    if (l < 0) return false;
  }
  return true;
}

bool Batch::any_labeled() const {
  for (int l : labels) {
    if (l >= 0) return true;
  }
  return false;
}

std::vector<std::size_t> Batch::label_indices() const {
  if (!fully_labeled()) throw ContractError("batch contains unlabeled rows");
  return {labels.begin(), labels.end()};
}

LossNoise::LossNoise(std::uint64_t seed)
    : seed_(seed),
      gaussian_(derive_seed(seed, "gaussian")),
      gumbel_(derive_seed(seed, "gumbel")) {}

Tensor LossNoise::gaussian(const Shape& shape) { return gaussian_.normal(shape); }

LossNoise::GumbelDraw LossNoise::gumbel_softmax(const Var& logits, double tau) {
  auto sample = sample_gumbel_softmax({logits}, tau, gumbel_.gumbel(logits.shape()));
  switch (mode_) {
    case Mode::free:
      break;
    case Mode::record:
      pins_.push_back({sample.hard, sample.soft.value()});
      break;
    case Mode::replay: {
      if (cursor_ >= pins_.size()) throw ContractError("replay ran past the recorded Gumbel draws");
      const Pin& pin = pins_[cursor_++];
      if (pin.anchor.shape() != logits.shape()) {
        throw ContractError("replayed Gumbel draw has a different shape");
      }
      sample.hard = pin.hard;
      Var one_hot = straight_through(sample, &pin.anchor);
      return {std::move(sample), one_hot};
    }
  }
  Var one_hot = straight_through(sample);
  return {std::move(sample), one_hot};
}

void LossNoise::start_recording() {
  mode_ = Mode::record;
  pins_.clear();
  cursor_ = 0;
}

LossNoise LossNoise::replay() const {
  LossNoise out(seed_);
  out.mode_ = Mode::replay;
  out.pins_ = pins_;
  return out;
}

namespace {

Var ce_hard(const Var& logits, std::span<const std::size_t> labels) {
  return -pick(log_softmax(logits), labels);
}

// Cross-entropy against soft label rows of width `soft.cols()`, padded with
// zeros up to the logits width.
Var ce_soft(const Var& logits, const Var& soft) {
  const std::size_t k = soft.value().cols();
  const std::size_t width = logits.value().cols();
  Var labels = soft;
  if (width != k) {
    Tensor embed(Shape{k, width});
    for (std::size_t i = 0; i < k; ++i) embed.at(i, i) = 1.0;
    labels = matmul(soft, soft.tape().constant(std::move(embed)));
  }
  return -sum(labels * log_softmax(logits), 1);
}

void require_nonempty(const Batch& batch, const char* what) {
  if (batch.empty()) throw ContractError(std::string(what) + ": empty batch");
}

void require_labels_in_range(const std::vector<std::size_t>& labels, std::size_t classes) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw IndexError("label " + std::to_string(labels[i]) + " in row " + std::to_string(i) +
                       " out of range for " + std::to_string(classes) + " classes");
    }
  }
}

BoundPrior prior_for_target(const BoundBundle& b, const LossOptions& opt) {
  if (opt.train_prior_on_target) return b.prior;
  return {detach(b.prior.means), detach(b.prior.log_vars), detach(b.prior.class_log_weights)};
}

} // namespace

Var reconstruction_nll(const BoundMlp& decoder, const Var& x, const Var& z) {
  Var diff = x - decode(decoder, z);
  const double d = static_cast<double>(x.value().cols());
  return sum(square(diff), 1) * 0.5 + 0.5 * d * std::log(2.0 * std::numbers::pi);
}

Var source_supervised_loss(const BoundBundle& b, const Batch& batch, const LossWeights& w,
                           LossNoise& noise) {
  require_nonempty(batch, "source_supervised_loss");
  if (!batch.fully_labeled()) {
    throw ContractError("source_supervised_loss: every source row needs a label");
  }
  const auto y = batch.label_indices();
  require_labels_in_range(y, b.model->shape.classes);

  Tape& tape = b.prior.means.tape();
  Var x = tape.constant(batch.x);
  auto q = encode(b.source_encoder, x);
  Var z = sample_gaussian(q, noise.gaussian(q.mu.shape()));

  auto [mu_y, lv_y] = component(b.prior, y);
  Var kl = kl_gaussian_to_component(q, mu_y, lv_y);
  Var recon = reconstruction_nll(b.decoder, x, z);
  Var ce = ce_hard(classify_latent(b.source_classifier, z), y);
  return mean(kl + recon + ce * w.alpha_s);
}

Var target_supervised_loss(const BoundBundle& b, const Batch& batch, const LossWeights& w,
                           const LossOptions& opt, LossNoise& noise) {
  require_nonempty(batch, "target_supervised_loss");
  if (!batch.fully_labeled()) {
    throw ContractError("target_supervised_loss: every row of the labeled batch needs a label");
  }
  const auto y = batch.label_indices();
  require_labels_in_range(y, b.model->shape.classes);

  Tape& tape = b.prior.means.tape();
  Var x = tape.constant(batch.x);
  auto q = encode(b.target_encoder, x);
  Var z = sample_gaussian(q, noise.gaussian(q.mu.shape()));

  auto [mu_y, lv_y] = component(prior_for_target(b, opt), y);
  Var kl = kl_gaussian_to_component(q, mu_y, lv_y);
  Var ce = ce_hard(classify_latent(b.target_classifier, z), y);
  return mean(kl + ce * w.alpha_t);
}

Var target_unsupervised_loss(const BoundBundle& b, const Batch& batch, const LossWeights& w,
                             const LossOptions& opt, LossNoise& noise) {
  require_nonempty(batch, "target_unsupervised_loss");
  if (batch.any_labeled()) {
    throw ContractError("target_unsupervised_loss: batch contains labeled rows");
  }
  const std::size_t k = b.model->shape.classes;
  const std::size_t rows = batch.size();

  Tape& tape = b.prior.means.tape();
  Var x = tape.constant(batch.x);
  auto q = encode(b.target_encoder, x);
  Var z = sample_gaussian(q, noise.gaussian(q.mu.shape()));
  Var logits = classify_latent(b.target_classifier, z);

  BoundPrior prior = prior_for_target(b, opt);
  Var class_term = kl_categorical_logits(logits, log_softmax(prior.class_log_weights));

  // KL against component y~, written as sum_k onehot_k KL_k so the
  // straight-through gradient reaches the classifier.
  auto draw = noise.gumbel_softmax(logits, w.tau);
  std::optional<Var> component_term;
  for (std::size_t c = 0; c < k; ++c) {
    const std::vector<std::size_t> same(rows, c);
    auto [mu_c, lv_c] = component(prior, same);
    Var weighted = pick(draw.one_hot, same) * kl_gaussian_to_component(q, mu_c, lv_c);
    component_term = component_term ? *component_term + weighted : weighted;
  }
  return mean(class_term + *component_term);
}

Var discriminator_loss(const BoundBundle& b, const Batch& source, const Batch& target,
                       const LossOptions& opt, LossNoise& noise) {
  if (source.empty() && target.empty()) {
    throw ContractError("discriminator_loss: both batches are empty");
  }
  const std::size_t k = b.model->shape.classes;
  const std::size_t expected = opt.binary_discriminator ? 2 : k + 1;
  if (b.model->shape.discriminator_classes() != expected) {
    throw ContractError("discriminator width does not match the binary_discriminator option");
  }
  Tape& tape = b.prior.means.tape();
  std::optional<Var> total;
  auto accumulate = [&](const Var& v) { total = total ? *total + v : v; };

  if (!source.empty()) {
    std::vector<std::size_t> y;
    if (opt.binary_discriminator) {
      y.assign(source.size(), 0);
    } else {
      y = source.label_indices();
      require_labels_in_range(y, k);
    }
    auto q = encode(b.source_encoder, tape.constant(source.x));
    Var z = detach(sample_gaussian(q, noise.gaussian(q.mu.shape())));
    accumulate(sum(ce_hard(discriminate(b.discriminator, z), y)));
  }
  if (!target.empty()) {
    const std::vector<std::size_t> fake(target.size(), opt.binary_discriminator ? 1 : k);
    auto q = encode(b.target_encoder, tape.constant(target.x));
    Var z = detach(sample_gaussian(q, noise.gaussian(q.mu.shape())));
    accumulate(sum(ce_hard(discriminate(b.discriminator, z), fake)));
  }
  return *total * (1.0 / static_cast<double>(source.size() + target.size()));
}

Var adversarial_loss(const BoundBundle& b, const Batch& unlabeled, const Batch& labeled,
                     const LossWeights& w, const LossOptions& opt, LossNoise& noise) {
  if (unlabeled.empty() && labeled.empty()) {
    throw ContractError("adversarial_loss: both target batches are empty");
  }
  if (unlabeled.any_labeled()) {
    throw ContractError("adversarial_loss: unlabeled batch contains labeled rows");
  }
  const std::size_t k = b.model->shape.classes;
  Tape& tape = b.prior.means.tape();
  BoundMlp disc = detached(b.discriminator);
  std::optional<Var> total;
  auto accumulate = [&](const Var& v) { total = total ? *total + v : v; };

  if (!unlabeled.empty()) {
    auto q = encode(b.target_encoder, tape.constant(unlabeled.x));
    Var z = sample_gaussian(q, noise.gaussian(q.mu.shape()));
    Var d_logits = discriminate(disc, z);
    if (opt.binary_discriminator) {
      accumulate(sum(ce_hard(d_logits, std::vector<std::size_t>(unlabeled.size(), 0))));
    } else {
      auto draw = noise.gumbel_softmax(classify_latent(b.target_classifier, z), w.tau);
      accumulate(sum(ce_soft(d_logits, draw.one_hot)));
    }
  }
  if (!labeled.empty()) {
    std::vector<std::size_t> y;
    if (opt.binary_discriminator) {
      y.assign(labeled.size(), 0);
    } else {
      y = labeled.label_indices();
      require_labels_in_range(y, k);
    }
    auto q = encode(b.target_encoder, tape.constant(labeled.x));
    Var z = sample_gaussian(q, noise.gaussian(q.mu.shape()));
    accumulate(sum(ce_hard(discriminate(disc, z), y)));
  }
  return *total * (1.0 / static_cast<double>(unlabeled.size() + labeled.size()));
}

TargetLoss target_total_loss(const BoundBundle& b, const Batch& labeled, const Batch& unlabeled,
                             const LossWeights& w, const LossOptions& opt, LossNoise& noise) {
  if (labeled.empty() && unlabeled.empty()) {
    throw ContractError("target_total_loss: both labeled and unlabeled batches are empty");
  }
  TargetLoss out;
  std::optional<Var> total;
  auto accumulate = [&](const Var& v) { total = total ? *total + v : v; };

  if (!labeled.empty()) {
    out.supervised = target_supervised_loss(b, labeled, w, opt, noise);
    accumulate(*out.supervised * w.gamma);
  }
  if (!unlabeled.empty()) {
    out.unsupervised = target_unsupervised_loss(b, unlabeled, w, opt, noise);
    accumulate(*out.unsupervised * (1.0 - w.gamma));
  }
  out.adversarial = adversarial_loss(b, unlabeled, labeled, w, opt, noise);
  accumulate(out.adversarial);
  if (opt.target_decoder) {
    const Batch& src = unlabeled.empty() ? labeled : unlabeled;
    Tape& tape = b.prior.means.tape();
    Var x = tape.constant(src.x);
    auto q = encode(b.target_encoder, x);
    Var z = sample_gaussian(q, noise.gaussian(q.mu.shape()));
    out.reconstruction = mean(reconstruction_nll(b.decoder, x, z));
    accumulate(*out.reconstruction);
  }
  out.total = *total;
  return out;
}

} // namespace avda
