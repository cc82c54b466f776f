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

#include "avda/rng.hpp"

#include <cmath>

namespace avda {

std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose) {
  // FNV-1a over the purpose tag, folded with splitmix64 of the base.
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : purpose) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL + h;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Tensor Rng::normal(Shape shape) {
  Tensor out(std::move(shape));
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : out.buffer()) v = dist(engine_);
  return out;
}

Tensor Rng::uniform(Shape shape, double lo, double hi) {
  Tensor out(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : out.buffer()) v = dist(engine_);
  return out;
}

double Rng::uniform01() {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double u = 0.0;
  do {
    u = dist(engine_);
  } while (u <= 0.0);
  return u;
}

Tensor Rng::gumbel(Shape shape) {
  Tensor out(std::move(shape));
  for (auto& v : out.buffer()) v = -std::log(-std::log(uniform01()));
  return out;
}

std::size_t Rng::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

} // namespace avda
