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
#include <random>
#include <string_view>

#include "avda/tensor.hpp"

namespace avda {

/// Derives an independent stream seed from a base seed and a purpose tag, so
/// that (for example) changing the number of Gumbel draws never perturbs the
/// minibatch order.
std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose);

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Tensor normal(Shape shape);
  Tensor uniform(Shape shape, double lo, double hi);
  /// Standard Gumbel(0, 1) noise: -log(-log(u)), u ~ U(0, 1) open interval.
  Tensor gumbel(Shape shape);
  double uniform01();
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

} // namespace avda
