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

#include "avda/networks.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "avda/error.hpp"

namespace avda {

std::string_view to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view text) {
  if (text == "tanh") return Activation::tanh;
  if (text == "relu") return Activation::relu;
  throw ValidationError("unknown activation '" + std::string(text) + "' (expected tanh or relu)");
}

void MlpSpec::validate() const {
  if (input_width < 1) throw ParameterError("mlp input width must be >= 1");
  if (hidden.empty()) throw ParameterError("mlp needs at least one hidden layer");
  for (auto w : hidden) {
    if (w < 1) throw ParameterError("mlp hidden widths must be >= 1");
  }
  if (heads.empty()) throw ParameterError("mlp needs at least one output head");
  for (const auto& h : heads) {
    if (h.width < 1) throw ParameterError("mlp head '" + h.name + "' has zero width");
  }
}

namespace {

// (fan_in, fan_out) of every weight matrix in parameter order.
std::vector<std::pair<std::size_t, std::size_t>> layer_dims(const MlpSpec& spec) {
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  std::size_t in = spec.input_width;
  for (auto w : spec.hidden) {
    dims.emplace_back(in, w);
    in = w;
  }
  for (const auto& h : spec.heads) dims.emplace_back(in, h.width);
  return dims;
}

} // namespace

Mlp Mlp::init(MlpSpec spec, Rng& rng) {
  spec.validate();
  Mlp mlp{std::move(spec), {}};
  for (auto [in, out] : layer_dims(mlp.spec)) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    mlp.params.push_back(rng.uniform(Shape{in, out}, -limit, limit));
    mlp.params.emplace_back(Shape{out});
  }
  return mlp;
}

Mlp Mlp::zeros(MlpSpec spec) {
  spec.validate();
  Mlp mlp{std::move(spec), {}};
  for (auto [in, out] : layer_dims(mlp.spec)) {
    mlp.params.emplace_back(Shape{in, out});
    mlp.params.emplace_back(Shape{out});
  }
  return mlp;
}

BoundMlp bind_mlp(Tape& tape, const Mlp& mlp, bool tracked) {
  BoundMlp bound{&mlp.spec, {}};
  bound.params.reserve(mlp.params.size());
  for (const auto& p : mlp.params) bound.params.push_back(tracked ? tape.leaf(p) : tape.constant(p));
  return bound;
}

BoundMlp detached(const BoundMlp& mlp) {
  BoundMlp out{mlp.spec, {}};
  for (const auto& p : mlp.params) out.params.push_back(detach(p));
  return out;
}

std::vector<Var> forward(const BoundMlp& mlp, const Var& x) {
  const MlpSpec& spec = *mlp.spec;
  if (x.value().rank() != 2 || x.value().cols() != spec.input_width) {
    throw ShapeError("mlp expects [B x " + std::to_string(spec.input_width) + "] input, got " +
                     shape_str(x.shape()));
  }
  Var h = x;
  std::size_t p = 0;
  for (std::size_t layer = 0; layer < spec.hidden.size(); ++layer, p += 2) {
    Var pre = matmul(h, mlp.params[p]) + mlp.params[p + 1];
    h = spec.activation == Activation::tanh ? tanh(pre) : relu(pre);
  }
  std::vector<Var> outs;
  for (std::size_t head = 0; head < spec.heads.size(); ++head, p += 2) {
    outs.push_back(matmul(h, mlp.params[p]) + mlp.params[p + 1]);
  }
  return outs;
}

std::string_view to_string(Group g) {
  switch (g) {
    case Group::source_encoder: return "source_encoder";
    case Group::source_classifier: return "source_classifier";
    case Group::decoder: return "decoder";
    case Group::target_encoder: return "target_encoder";
    case Group::target_classifier: return "target_classifier";
    case Group::discriminator: return "discriminator";
    case Group::prior: return "prior";
  }
  return "unknown";
}

ModelBundle ModelBundle::init(const BundleShape& shape, double prior_radius, double prior_sigma,
                              std::uint64_t seed) {
  if (shape.input_dim < 1) throw ParameterError("input dimension must be >= 1");
  if (shape.classes < 2) throw ParameterError("need at least 2 classes");
  if (shape.latent_dim < 1) throw ParameterError("latent dimension must be >= 1");

  Rng rng(derive_seed(seed, "init"));
  const auto& hidden = shape.hidden;
  const auto act = shape.activation;
  const std::size_t j = shape.latent_dim;

  ModelBundle b;
  b.shape = shape;
  b.source_encoder = Mlp::init({shape.input_dim, hidden, act, {{"mu", j}, {"log_var", j}}}, rng);
  b.decoder = Mlp::init({j, hidden, act, {{"x", shape.input_dim}}}, rng);
  b.source_classifier = Mlp::init({j, hidden, act, {{"logits", shape.classes}}}, rng);
  b.discriminator =
      Mlp::init({j, hidden, act, {{"logits", shape.discriminator_classes()}}}, rng);
  b.prior = init_prior(shape.classes, j, prior_radius, prior_sigma);
  b.warm_start_target();
  return b;
}

void ModelBundle::warm_start_target() {
  target_encoder = source_encoder;
  target_classifier = source_classifier;
}

std::vector<Tensor*> ModelBundle::group(Group g) {
  auto refs = [](Mlp& m) {
    std::vector<Tensor*> out;
    for (auto& p : m.params) out.push_back(&p);
    return out;
  };
  switch (g) {
    case Group::source_encoder: return refs(source_encoder);
    case Group::source_classifier: return refs(source_classifier);
    case Group::decoder: return refs(decoder);
    case Group::target_encoder: return refs(target_encoder);
    case Group::target_classifier: return refs(target_classifier);
    case Group::discriminator: return refs(discriminator);
    case Group::prior: return {&prior.means, &prior.log_vars, &prior.class_log_weights};
  }
  return {};
}

std::vector<const Tensor*> ModelBundle::group(Group g) const {
  auto mutable_refs = const_cast<ModelBundle*>(this)->group(g);
  return {mutable_refs.begin(), mutable_refs.end()};
}

std::uint64_t hash_group(const ModelBundle& bundle, Group g) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const Tensor* t : bundle.group(g)) {
    for (double v : t->data()) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

std::vector<Var> BoundBundle::group_vars(Group g) const {
  switch (g) {
    case Group::source_encoder: return source_encoder.params;
    case Group::source_classifier: return source_classifier.params;
    case Group::decoder: return decoder.params;
    case Group::target_encoder: return target_encoder.params;
    case Group::target_classifier: return target_classifier.params;
    case Group::discriminator: return discriminator.params;
    case Group::prior: return {prior.means, prior.log_vars, prior.class_log_weights};
  }
  return {};
}

BoundBundle bind_bundle(Tape& tape, const ModelBundle& bundle, std::span<const Group> tracked) {
  BoundBundle b;
  b.model = &bundle;
  for (Group g : tracked) b.tracked[static_cast<std::size_t>(g)] = true;
  b.source_encoder = bind_mlp(tape, bundle.source_encoder, b.is_tracked(Group::source_encoder));
  b.target_encoder = bind_mlp(tape, bundle.target_encoder, b.is_tracked(Group::target_encoder));
  b.decoder = bind_mlp(tape, bundle.decoder, b.is_tracked(Group::decoder));
  b.source_classifier =
      bind_mlp(tape, bundle.source_classifier, b.is_tracked(Group::source_classifier));
  b.target_classifier =
      bind_mlp(tape, bundle.target_classifier, b.is_tracked(Group::target_classifier));
  b.discriminator = bind_mlp(tape, bundle.discriminator, b.is_tracked(Group::discriminator));
  b.prior = bind_prior(tape, bundle.prior, b.is_tracked(Group::prior));
  return b;
}

DiagonalGaussian encode(const BoundMlp& encoder, const Var& x) {
  auto heads = forward(encoder, x);
  if (heads.size() != 2 || heads[0].shape() != heads[1].shape()) {
    throw ShapeError("encoder must have two equal-width heads (mu, log_var)");
  }
  return {heads[0], heads[1]};
}

Var classify_latent(const BoundMlp& classifier, const Var& z) { return forward(classifier, z).at(0); }

Var decode(const BoundMlp& decoder, const Var& z) { return forward(decoder, z).at(0); }

Var discriminate(const BoundMlp& discriminator, const Var& z) {
  return forward(discriminator, z).at(0);
}

std::vector<std::size_t> predict_class(const Mlp& encoder, const Mlp& classifier, const Tensor& x,
                                       PredictMode mode, Rng* rng) {
  Tape tape;
  auto enc = bind_mlp(tape, encoder, false);
  auto cls = bind_mlp(tape, classifier, false);
  auto q = encode(enc, tape.constant(x));
  Var z = q.mu;
  if (mode == PredictMode::sampled_z) {
    if (!rng) throw ContractError("sampled_z prediction needs an rng");
    z = sample_gaussian(q, rng->normal(q.mu.shape()));
  }
  const Tensor& logits = classify_latent(cls, z).value();
  std::vector<std::size_t> out(logits.rows());
  for (std::size_t r = 0; r < out.size(); ++r) {
    auto row = logits.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Tensor encode_means(const Mlp& encoder, const Tensor& x) {
  Tape tape;
  auto enc = bind_mlp(tape, encoder, false);
  return encode(enc, tape.constant(x)).mu.value();
}

} // namespace avda
