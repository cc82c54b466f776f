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

#include "avda/gmm_prior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "avda/error.hpp"

namespace avda {

GmmPrior init_prior(std::size_t classes, std::size_t latent_dim, double radius, double init_sigma) {
  if (classes < 2) throw ParameterError("prior needs at least 2 classes, got " + std::to_string(classes));
  if (latent_dim < 1) throw ParameterError("latent dimension must be >= 1");
  if (!(radius > 0.0)) throw ParameterError("prior radius must be > 0");
  if (!(init_sigma > 0.0)) throw ParameterError("prior init_sigma must be > 0");

  GmmPrior prior;
  prior.classes = classes;
  prior.latent_dim = latent_dim;
  prior.means = Tensor(Shape{classes, latent_dim});
  for (std::size_t y = 0; y < classes; ++y) {
    const std::size_t axis = y % latent_dim;
    const double sign = (y / latent_dim) % 2 == 0 ? 1.0 : -1.0;
    prior.means.at(y, axis) = sign * radius;
  }
  prior.log_vars = Tensor(Shape{classes, latent_dim}, std::log(init_sigma * init_sigma));
  prior.class_log_weights = Tensor(Shape{classes}, -std::log(static_cast<double>(classes)));
  return prior;
}

std::pair<Tensor, Tensor> component(const GmmPrior& prior, std::size_t y) {
  if (y >= prior.classes) {
    throw IndexError("class " + std::to_string(y) + " out of range for a " +
                     std::to_string(prior.classes) + "-component prior");
  }
  const auto mu = prior.means.row(y);
  const auto lv = prior.log_vars.row(y);
  return {Tensor(Shape{prior.latent_dim}, std::vector<double>(mu.begin(), mu.end())),
          Tensor(Shape{prior.latent_dim}, std::vector<double>(lv.begin(), lv.end()))};
}

Tensor responsibilities(const GmmPrior& prior, const Tensor& z) {
  const std::size_t j_dim = prior.latent_dim;
  if (z.rank() == 0 || z.shape().back() != j_dim || z.rank() > 2) {
    throw ShapeError("responsibilities: z " + shape_str(z.shape()) + " vs latent dim " +
                     std::to_string(j_dim));
  }
  const std::size_t rows = z.size() / j_dim;
  const std::size_t k = prior.classes;

  // Normalized log class weights.
  std::vector<double> log_pi(k);
  {
    const double mx = *std::max_element(prior.class_log_weights.data().begin(),
                                        prior.class_log_weights.data().end());
    double s = 0.0;
    for (std::size_t y = 0; y < k; ++y) s += std::exp(prior.class_log_weights[y] - mx);
    for (std::size_t y = 0; y < k; ++y) log_pi[y] = prior.class_log_weights[y] - mx - std::log(s);
  }

  Tensor out(z.rank() == 1 ? Shape{k} : Shape{rows, k});
  std::vector<double> score(k);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t y = 0; y < k; ++y) {
      double lp = log_pi[y];
      for (std::size_t j = 0; j < j_dim; ++j) {
        const double lv = prior.log_vars.at(y, j);
        const double d = z[r * j_dim + j] - prior.means.at(y, j);
        lp -= 0.5 * (std::log(2.0 * std::numbers::pi) + lv + d * d * std::exp(-lv));
      }
      score[y] = lp;
    }
    const double mx = *std::max_element(score.begin(), score.end());
    double s = 0.0;
    for (double v : score) s += std::exp(v - mx);
    for (std::size_t y = 0; y < k; ++y) out[r * k + y] = std::exp(score[y] - mx) / s;
  }
  return out;
}

BoundPrior bind_prior(Tape& tape, const GmmPrior& prior, bool tracked) {
  auto bind = [&](const Tensor& t) { return tracked ? tape.leaf(t) : tape.constant(t); };
  return {bind(prior.means), bind(prior.log_vars), bind(prior.class_log_weights)};
}

std::pair<Var, Var> component(const BoundPrior& prior, std::span<const std::size_t> labels) {
  return {take_rows(prior.means, labels), take_rows(prior.log_vars, labels)};
}

} // namespace avda
