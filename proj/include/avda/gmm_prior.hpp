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
#include <span>
#include <utility>

#include "avda/autodiff.hpp"

namespace avda {

/// Learnable Gaussian-mixture prior over the latent space, one component per
/// class: p(z | y) = N(means[y], exp(log_vars[y])), p(y) = softmax(class_log_weights).
struct GmmPrior {
  std::size_t classes = 0;
  std::size_t latent_dim = 0;
  Tensor means;              // [K x J]
  Tensor log_vars;           // [K x J]
  Tensor class_log_weights;  // [K]
};

/// Places component y at radius * e_(y mod J). When K > J the axes are
/// reused round-robin with the sign flipped on every pass. Variances start at
/// init_sigma^2; class weights start uniform.
GmmPrior init_prior(std::size_t classes, std::size_t latent_dim, double radius, double init_sigma);

/// Copies of the y-th component's mean and log-variance.
std::pair<Tensor, Tensor> component(const GmmPrior& prior, std::size_t y);

/// Posterior class probabilities under the prior for each row of z ([J] or
/// [B x J]): softmax_y(log pi_y + log N(z | mu_y, sigma_y^2)).
Tensor responsibilities(const GmmPrior& prior, const Tensor& z);

/// Prior parameters recorded on a tape, tracked or not.
struct BoundPrior {
  Var means;
  Var log_vars;
  Var class_log_weights;
};

BoundPrior bind_prior(Tape& tape, const GmmPrior& prior, bool tracked);

/// Rows of the mean and log-variance tables for each label; gradients flow
/// back into the bound prior.
std::pair<Var, Var> component(const BoundPrior& prior, std::span<const std::size_t> labels);

} // namespace avda
