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
#include <vector>

#include "avda/autodiff.hpp"

namespace avda {

/// Diagonal Gaussian q(z) = N(mu, exp(log_var)). Either a single [J]
/// distribution or a batch of rows [B x J].
struct DiagonalGaussian {
  Var mu;
  Var log_var;
};

/// Unnormalized class scores; the last dimension indexes classes.
struct CategoricalLogits {
  Var logits;
};

/// Reparameterized draw mu + exp(log_var / 2) * noise. `noise` must be
/// standard normal with the shape of `g.mu`.
Var sample_gaussian(const DiagonalGaussian& g, const Tensor& noise);

/// Closed-form KL(q || N(mu_y, exp(log_var_y))) summed over the last axis:
///
///   1/2 sum_j [ lv_y - lv_q - 1 + exp(lv_q - lv_y) + (mu_q - mu_y)^2 exp(-lv_y) ]
///
/// A [J] input gives a scalar; [B x J] gives one value per row. The component
/// arguments may be [J] (shared by every row) or [B x J].
Var kl_gaussian_to_component(const DiagonalGaussian& q, const Var& mu_y, const Var& log_var_y);

struct GumbelSoftmaxSample {
  /// Relaxed sample softmax((logits + g) / tau), same shape as the logits.
  Var soft;
  /// argmax of each row of `soft`.
  std::vector<std::size_t> hard;
};

/// Gumbel-softmax draw. `gumbel_noise` must have the logits' shape and hold
/// standard Gumbel noise. Throws ParameterError when tau <= 0.
GumbelSoftmaxSample sample_gumbel_softmax(const CategoricalLogits& c, double tau,
                                          const Tensor& gumbel_noise);

/// One-hot rows of the hard sample on the forward pass with the gradient of
/// `sample.soft` on the backward pass: onehot + soft - anchor. `anchor` is
/// the soft value treated as a constant; it defaults to the current soft
/// value, which makes the forward value exactly one-hot.
Var straight_through(const GumbelSoftmaxSample& sample, const Tensor* anchor = nullptr);

/// KL(q || p) = sum_k q_k log(q_k / p_k) over the last axis, with
/// 0 log(0 / p) = 0. Both arguments must lie on the simplex; q_k > 0 where
/// p_k = 0 throws DomainError.
Var kl_categorical(const Var& q_probs, const Var& p_probs);

/// KL(softmax(q_logits) || exp(p_log_probs)) over the last axis, built from
/// log-softmax so it never takes log(0).
Var kl_categorical_logits(const Var& q_logits, const Var& p_log_probs);

} // namespace avda
