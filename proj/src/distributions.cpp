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

#include "avda/distributions.hpp"

#include <cmath>
#include <string>

#include "avda/error.hpp"

namespace avda {

Var sample_gaussian(const DiagonalGaussian& g, const Tensor& noise) {
  if (g.mu.shape() != g.log_var.shape()) {
    throw ShapeError("gaussian mu " + shape_str(g.mu.shape()) + " vs log_var " +
                     shape_str(g.log_var.shape()));
  }
  if (noise.shape() != g.mu.shape()) {
    throw ShapeError("gaussian noise " + shape_str(noise.shape()) + " vs mu " +
                     shape_str(g.mu.shape()));
  }
  Var eps = g.mu.tape().constant(noise);
  return g.mu + exp(g.log_var * 0.5) * eps;
}

Var kl_gaussian_to_component(const DiagonalGaussian& q, const Var& mu_y, const Var& log_var_y) {
  if (q.mu.shape() != q.log_var.shape()) {
    throw ShapeError("posterior mu " + shape_str(q.mu.shape()) + " vs log_var " +
                     shape_str(q.log_var.shape()));
  }
  if (mu_y.shape() != log_var_y.shape()) {
    throw ShapeError("component mu " + shape_str(mu_y.shape()) + " vs log_var " +
                     shape_str(log_var_y.shape()));
  }
  if (q.mu.shape().empty() || mu_y.shape().empty() ||
      q.mu.shape().back() != mu_y.shape().back()) {
    throw ShapeError("latent width mismatch: " + shape_str(q.mu.shape()) + " vs " +
                     shape_str(mu_y.shape()));
  }
  // Broadcast rules reject [B x J] against a different [B' x J].
  Var diff = q.mu - mu_y;
  Var terms = log_var_y - q.log_var + exp(q.log_var - log_var_y) +
              square(diff) * exp(-log_var_y) - 1.0;
  const std::size_t last = terms.shape().size() - 1;
  return sum(terms, last) * 0.5;
}

GumbelSoftmaxSample sample_gumbel_softmax(const CategoricalLogits& c, double tau,
                                          const Tensor& gumbel_noise) {
  if (!(tau > 0.0)) {
    throw ParameterError("gumbel-softmax temperature must be > 0, got " + std::to_string(tau));
  }
  if (gumbel_noise.shape() != c.logits.shape()) {
    throw ShapeError("gumbel noise " + shape_str(gumbel_noise.shape()) + " vs logits " +
                     shape_str(c.logits.shape()));
  }
  Var g = c.logits.tape().constant(gumbel_noise);
  Var soft = softmax((c.logits + g) * (1.0 / tau));

  const Tensor& s = soft.value();
  const std::size_t k = s.shape().back();
  const std::size_t rows = s.size() / k;
  std::vector<std::size_t> hard(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (s[r * k + j] > s[r * k + best]) best = j;
    }
    hard[r] = best;
  }
  return {soft, std::move(hard)};
}

Var straight_through(const GumbelSoftmaxSample& sample, const Tensor* anchor) {
  const Tensor& s = sample.soft.value();
  const std::size_t k = s.shape().back();
  Tensor onehot(s.shape());
  for (std::size_t r = 0; r < sample.hard.size(); ++r) onehot[r * k + sample.hard[r]] = 1.0;
  const Tensor& a = anchor ? *anchor : s;
  if (a.shape() != s.shape()) {
    throw ShapeError("straight-through anchor " + shape_str(a.shape()) + " vs sample " +
                     shape_str(s.shape()));
  }
  Tape& tape = sample.soft.tape();
  Tensor offset(s.shape());
  for (std::size_t i = 0; i < offset.size(); ++i) offset[i] = onehot[i] - a[i];
  return sample.soft + tape.constant(std::move(offset));
}

Var kl_categorical(const Var& q_probs, const Var& p_probs) {
  const Tensor& q = q_probs.value();
  const Tensor& p = p_probs.value();
  if (q.shape() != p.shape() || q.rank() == 0) {
    throw ShapeError("kl_categorical: " + shape_str(q.shape()) + " vs " + shape_str(p.shape()));
  }
  const std::size_t k = q.shape().back();
  const std::size_t rows = q.size() / k;
  constexpr double kSimplexTol = 1e-9;
  Tensor out(Shape(q.shape().begin(), q.shape().end() - 1));
  Tensor dq(q.shape());
  Tensor dp(q.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double sq = 0.0, sp = 0.0, acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double qj = q[r * k + j];
      const double pj = p[r * k + j];
      if (qj < 0.0 || pj < 0.0) {
        throw DomainError("kl_categorical: negative probability in row " + std::to_string(r));
      }
      sq += qj;
      sp += pj;
      if (qj == 0.0) continue;
      if (pj == 0.0) {
        throw DomainError("kl_categorical: q has mass on class " + std::to_string(j) +
                          " where p is zero (row " + std::to_string(r) + ")");
      }
      const double lr = std::log(qj / pj);
      acc += qj * lr;
      dq[r * k + j] = lr + 1.0;
      dp[r * k + j] = -qj / pj;
    }
    if (std::abs(sq - 1.0) > kSimplexTol || std::abs(sp - 1.0) > kSimplexTol) {
      throw DomainError("kl_categorical: row " + std::to_string(r) + " is not on the simplex");
    }
    out[r] = acc;
  }
  const Var parents[] = {q_probs, p_probs};
  return q_probs.tape().record(
      std::move(out), parents,
      [q_probs, p_probs, dq = std::move(dq), dp = std::move(dp), k](const Tensor& g,
                                                                     GradSink& sink) {
        Tensor gq(dq.shape()), gp(dp.shape());
        for (std::size_t i = 0; i < gq.size(); ++i) {
          gq[i] = g[i / k] * dq[i];
          gp[i] = g[i / k] * dp[i];
        }
        sink.add(q_probs, gq);
        sink.add(p_probs, gp);
      });
}

Var kl_categorical_logits(const Var& q_logits, const Var& p_log_probs) {
  Var log_q = log_softmax(q_logits);
  Var terms = exp(log_q) * (log_q - p_log_probs);
  return sum(terms, terms.shape().size() - 1);
}

} // namespace avda
