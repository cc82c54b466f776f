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

#include "avda/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "avda/error.hpp"
#include "avda/rng.hpp"

namespace avda {

AdamState& OptimizerSet::for_group(Group g, const AdamSettings& settings) {
  auto [it, inserted] = states.try_emplace(g);
  if (inserted) it->second.settings = settings;
  return it->second;
}

void apply_gradients(ModelBundle& model, OptimizerSet& optim, const AdamSettings& settings,
                     const BoundBundle& bound, const Gradients& grads, std::span<const Group> groups,
                     bool learn_class_weights) {
  for (Group g : groups) {
    auto params = model.group(g);
    auto vars = bound.group_vars(g);
    std::vector<Tensor> gs;
    gs.reserve(vars.size());
    for (const auto& v : vars) gs.push_back(grads.of(v));
    if (g == Group::prior && !learn_class_weights) {
      gs[2] = Tensor(gs[2].shape());
    }
    adam_step(optim.for_group(g, settings), params, gs);
  }
}

void check_finite(const ModelBundle& model, std::string_view context) {
  for (Group g : kAllGroups) {
    for (const Tensor* t : model.group(g)) {
      if (!t->all_finite()) {
        throw NumericError(std::string(context) + ": non-finite value in " +
                           std::string(to_string(g)) + " parameters");
      }
    }
  }
}

SourceTrainer::SourceTrainer(const ExperimentConfig& cfg, ModelBundle& model, OptimizerSet& optim)
    : cfg_(cfg), model_(model), optim_(optim) {
  groups_ = {Group::source_encoder, Group::source_classifier, Group::decoder};
  if (!cfg.ablation.fixed_priors) groups_.push_back(Group::prior);
}

double SourceTrainer::step(const Batch& batch, std::uint64_t noise_seed) {
  Tape tape;
  auto bound = bind_bundle(tape, model_, groups_);
  LossNoise noise(noise_seed);
  Var loss = source_supervised_loss(bound, batch, cfg_.weights, noise);
  const double value = loss.value().item();
  if (!std::isfinite(value)) throw NumericError("source loss is not finite");
  auto grads = tape.backward(loss);
  apply_gradients(model_, optim_, cfg_.adam, bound, grads, groups_, cfg_.learn_class_weights);
  return value;
}

AdaptationTrainer::AdaptationTrainer(const ExperimentConfig& cfg, ModelBundle& model,
                                     OptimizerSet& optim)
    : cfg_(cfg), model_(model), optim_(optim), options_(cfg.loss_options()) {
  target_groups_ = {Group::target_encoder, Group::target_classifier};
  if (options_.target_decoder) target_groups_.push_back(Group::decoder);
  if (options_.train_prior_on_target) target_groups_.push_back(Group::prior);
}

double AdaptationTrainer::discriminator_step(const Batch& source, const Batch& target,
                                             std::uint64_t noise_seed) {
  static constexpr Group kGroups[] = {Group::discriminator};
  Tape tape;
  auto bound = bind_bundle(tape, model_, kGroups);
  LossNoise noise(noise_seed);
  Batch fake{target.x, {}};
  Var loss = discriminator_loss(bound, source, fake, options_, noise);
  const double value = loss.value().item();
  if (!std::isfinite(value)) throw NumericError("discriminator loss is not finite");
  auto grads = tape.backward(loss);
  apply_gradients(model_, optim_, cfg_.adam, bound, grads, kGroups, false);
  return value;
}

TargetStepLosses AdaptationTrainer::target_step(const Batch& labeled, const Batch& unlabeled,
                                                std::uint64_t noise_seed) {
  Tape tape;
  auto bound = bind_bundle(tape, model_, target_groups_);
  LossNoise noise(noise_seed);
  auto parts = target_total_loss(bound, labeled, unlabeled, cfg_.weights, options_, noise);
  TargetStepLosses out;
  out.total = parts.total.value().item();
  if (!std::isfinite(out.total)) throw NumericError("target loss is not finite");
  if (parts.supervised) out.supervised = parts.supervised->value().item();
  if (parts.unsupervised) out.unsupervised = parts.unsupervised->value().item();
  out.adversarial = parts.adversarial.value().item();
  if (parts.reconstruction) out.reconstruction = parts.reconstruction->value().item();
  auto grads = tape.backward(parts.total);
  apply_gradients(model_, optim_, cfg_.adam, bound, grads, target_groups_,
                  cfg_.learn_class_weights);
  return out;
}

namespace {

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.index(i)]);
  return p;
}

// `count` distinct indices from [0, n), or all of them when count >= n.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
  auto p = permutation(n, rng);
  p.resize(std::min(count, n));
  return p;
}

Batch make_batch(const Tensor& x, const std::optional<std::vector<std::size_t>>& labels,
                 std::span<const std::size_t> rows) {
  Batch b{gather_rows(x, rows), {}};
  if (labels) {
    b.labels.reserve(rows.size());
    for (auto r : rows) b.labels.push_back(static_cast<int>((*labels)[r]));
  }
  return b;
}

double accuracy_of(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return truth.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
}

void require_classes(const ExperimentConfig& cfg, const DomainDataset& ds, std::string_view what) {
  if (ds.classes != cfg.classes) {
    throw ValidationError("config key 'classes': " + std::string(what) + " data has " +
                          std::to_string(ds.classes) + " classes, config says " +
                          std::to_string(cfg.classes));
  }
}

} // namespace

SourceRun train_source(const ExperimentConfig& cfg, const DomainDataset& source) {
  cfg.validate();
  if (!source.labeled()) throw ContractError("train_source: source data must be fully labeled");
  require_classes(cfg, source, "source");
  source.validate();

  SourceRun run;
  run.model = ModelBundle::init(cfg.bundle_shape(source.dim()), cfg.prior_radius,
                                cfg.prior_init_sigma, cfg.seed);
  run.model.scaler = FeatureScaler::fit(source.features);
  const Tensor x = run.model.scaler.apply(source.features);
  const auto& labels = *source.labels;

  Rng shuffle(derive_seed(cfg.seed, "source/shuffle"));
  Rng noise(derive_seed(cfg.seed, "source/noise"));
  SourceTrainer trainer(cfg, run.model, run.optim);

  for (std::size_t epoch = 1; epoch <= cfg.source_epochs; ++epoch) {
    const auto order = permutation(source.size(), shuffle);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> rows(order.data() + start, end - start);
      const double loss = trainer.step(make_batch(x, source.labels, rows), noise.engine()());
      loss_sum += loss * static_cast<double>(rows.size());
    }
    check_finite(run.model, "source epoch " + std::to_string(epoch));
    SourceEpoch m;
    m.epoch = epoch;
    m.loss = loss_sum / static_cast<double>(source.size());
    m.accuracy = accuracy_of(predict_class(run.model.source_encoder, run.model.source_classifier, x),
                             labels);
    run.epochs.push_back(m);
  }
  return run;
}

AdaptationRun train_adaptation(const ExperimentConfig& cfg, const ModelBundle& source_model,
                               const DomainDataset& source, const DomainDataset& target,
                               const FewShotSplit& split, std::uint64_t seed) {
  cfg.validate();
  if (source_model.scaler.empty()) {
    throw ContractError("train_adaptation: source model has no fitted scaler (not trained)");
  }
  if (!source.labeled()) throw ContractError("train_adaptation: source data must be labeled");
  require_classes(cfg, source, "source");
  require_classes(cfg, target, "target");
  if (source_model.shape.classes != cfg.classes ||
      source_model.shape.input_dim != target.dim() || source.dim() != target.dim()) {
    throw ValidationError("source model, source data and target data disagree on shape");
  }
  if (split.labeled_indices.size() != cfg.shots * cfg.classes) {
    throw ContractError("labeled split holds " + std::to_string(split.labeled_indices.size()) +
                        " samples, expected shots * classes = " +
                        std::to_string(cfg.shots * cfg.classes));
  }
  if (!split.labeled_indices.empty() && !target.labeled()) {
    throw ContractError("few-shot labels requested for an unlabeled target set");
  }
  if (split.unlabeled_indices.empty() && split.labeled_indices.empty()) {
    throw ContractError("train_adaptation: empty target set");
  }

  AdaptationRun run;
  run.model = source_model;
  run.model.warm_start_target();
  run.model.shape.binary_discriminator = cfg.ablation.binary_discriminator;
  {
    Rng init(derive_seed(seed, "discriminator"));
    const auto& s = run.model.shape;
    run.model.discriminator =
        Mlp::init({s.latent_dim, s.hidden, s.activation, {{"logits", s.discriminator_classes()}}}, init);
  }

  const Tensor xs = run.model.scaler.apply(source.features);
  const Tensor xt = run.model.scaler.apply(target.features);
  const auto& lab = split.labeled_indices;
  const auto& unl = split.unlabeled_indices;

  std::optional<std::vector<std::size_t>> eval_labels;
  Tensor eval_x;
  if (target.labeled() && !unl.empty()) {
    eval_x = gather_rows(xt, unl);
    std::vector<std::size_t> ys;
    for (auto i : unl) ys.push_back((*target.labels)[i]);
    eval_labels = std::move(ys);
    run.source_only_accuracy = accuracy_of(
        predict_class(run.model.source_encoder, run.model.source_classifier, eval_x), *eval_labels);
  }

  const std::size_t quota =
      lab.empty() ? 0 : std::min(lab.size(), std::max<std::size_t>(1, cfg.batch_size / 4));
  const std::size_t iterations =
      unl.empty() ? (lab.size() + quota - 1) / quota : (unl.size() + cfg.batch_size - 1) / cfg.batch_size;

  Rng shuffle(derive_seed(seed, "adapt/shuffle"));
  Rng source_pick(derive_seed(seed, "adapt/source"));
  Rng labeled_pick(derive_seed(seed, "adapt/labeled"));
  Rng noise(derive_seed(seed, "adapt/noise"));
  AdaptationTrainer trainer(cfg, run.model, run.optim);

  for (std::size_t epoch = 1; epoch <= cfg.adaptation_epochs; ++epoch) {
    const auto order = permutation(unl.size(), shuffle);
    double sup = 0.0, unsup = 0.0, adv = 0.0, disc = 0.0, recon = 0.0;
    std::size_t n_sup = 0, n_unsup = 0, n_recon = 0, n_disc = 0;

    for (std::size_t it = 0; it < iterations; ++it) {
      std::vector<std::size_t> u_rows;
      for (std::size_t k = it * cfg.batch_size; k < std::min(order.size(), (it + 1) * cfg.batch_size); ++k) {
        u_rows.push_back(unl[order[k]]);
      }
      std::vector<std::size_t> l_rows;
      for (std::size_t k = 0; k < quota; ++k) l_rows.push_back(lab[labeled_pick.index(lab.size())]);

      Batch unlabeled = make_batch(xt, std::nullopt, u_rows);
      Batch labeled = make_batch(xt, target.labels, l_rows);
      if (u_rows.empty()) unlabeled = Batch{Tensor(Shape{0, xt.cols()}), {}};
      if (l_rows.empty()) labeled = Batch{Tensor(Shape{0, xt.cols()}), {}};

      std::vector<std::size_t> all_rows = u_rows;
      all_rows.insert(all_rows.end(), l_rows.begin(), l_rows.end());
      const Batch fake = make_batch(xt, std::nullopt, all_rows);

      for (std::size_t d = 0; d < cfg.d_steps_per_t_step; ++d) {
        const auto s_rows = sample_without_replacement(source.size(), cfg.batch_size, source_pick);
        disc += trainer.discriminator_step(make_batch(xs, source.labels, s_rows), fake,
                                           noise.engine()());
        ++n_disc;
      }
      const auto losses = trainer.target_step(labeled, unlabeled, noise.engine()());
      if (losses.supervised) sup += *losses.supervised, ++n_sup;
      if (losses.unsupervised) unsup += *losses.unsupervised, ++n_unsup;
      if (losses.reconstruction) recon += *losses.reconstruction, ++n_recon;
      adv += losses.adversarial;
    }
    check_finite(run.model, "adaptation epoch " + std::to_string(epoch));

    AdaptationEpoch m;
    m.epoch = epoch;
    if (n_sup) m.supervised = sup / static_cast<double>(n_sup);
    if (n_unsup) m.unsupervised = unsup / static_cast<double>(n_unsup);
    if (n_recon) m.reconstruction = recon / static_cast<double>(n_recon);
    m.adversarial = adv / static_cast<double>(iterations);
    m.discriminator = disc / static_cast<double>(n_disc);
    if (eval_labels) {
      m.target_accuracy = accuracy_of(
          predict_class(run.model.target_encoder, run.model.target_classifier, eval_x), *eval_labels);
    }
    run.epochs.push_back(m);
  }
  if (eval_labels) {
    run.final_accuracy = run.epochs.empty()
                             ? accuracy_of(predict_class(run.model.target_encoder,
                                                         run.model.target_classifier, eval_x),
                                           *eval_labels)
                             : *run.epochs.back().target_accuracy;
  }
  return run;
}

} // namespace avda
