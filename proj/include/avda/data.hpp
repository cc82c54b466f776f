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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "avda/tensor.hpp"

namespace avda {

enum class Domain : std::uint8_t { source = 0, target = 1 };

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view text);

/// Feature matrix with optional integer labels in [0, classes).
struct DomainDataset {
  Tensor features;  // [N x D]
  std::optional<std::vector<std::size_t>> labels;
  Domain domain = Domain::source;
  std::size_t classes = 0;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  bool labeled() const { return labels.has_value(); }

  /// Throws ValidationError on non-finite features or out-of-range labels.
  void validate() const;
  /// Rows selected by index (labels follow).
  DomainDataset subset(const std::vector<std::size_t>& indices) const;
};

struct AffineShift {
  double rotation_deg = 0.0;          // applied in the plane of the first two features
  std::vector<double> translation;  // empty = no translation; otherwise length D
  double scale = 1.0;
};

struct DomainPair {
  DomainDataset source;
  DomainDataset target;
};

/// K isotropic Gaussian blobs (centers evenly spaced on a circle of radius
/// `center_radius` in the first two features); the target is an independent
/// draw from the same blobs pushed through `shift`. Class c in the target is
/// the image of class c in the source.
DomainPair gen_shifted_blobs(std::size_t classes, std::size_t dim, std::size_t n_per_class,
                             const AffineShift& shift, double noise_sigma, std::uint64_t seed,
                             double center_radius = 1.0);

/// Two interleaved unit half-circles (class 0 upper, class 1 lower and
/// offset), ceil(n/2) and floor(n/2) points; the target is shifted.
DomainPair gen_two_moons_pair(std::size_t n, const AffineShift& shift, double noise,
                              std::uint64_t seed);

/// Named generator presets used by the CLI and the acceptance suite.
/// Known names: "rotated-blobs", "rotated-blobs-small", "two-moons".
DomainPair gen_preset(std::string_view name, std::uint64_t seed);
std::vector<std::string> preset_names();

/// Reads a labeled array in CSV (header `f0,...,f{D-1}[,label]`) or the
/// binary container format (detected by magic bytes). When `classes` is
/// given, labels must be below it; otherwise it is inferred as max label + 1
/// (CSV) or read from the container. `domain` tags CSV input; binary files
/// carry their own tag.
DomainDataset load_labeled_array(const std::filesystem::path& path,
                                 std::optional<std::size_t> classes = std::nullopt,
                                 Domain domain = Domain::source);

/// Writes CSV unless the extension is ".avdd", which selects the binary
/// container.
void save_labeled_array(const DomainDataset& ds, const std::filesystem::path& path);

struct FewShotSplit {
  std::vector<std::size_t> labeled_indices;
  std::vector<std::size_t> unlabeled_indices;
};

/// Picks exactly `shots` random examples of every class as labeled; the rest
/// are unlabeled. Both index lists are sorted ascending.
FewShotSplit make_few_shot_split(const DomainDataset& ds, std::size_t shots, std::uint64_t seed);

/// Per-feature affine map of the source range onto [-1, 1].
struct FeatureScaler {
  std::vector<double> lo;
  std::vector<double> hi;

  static FeatureScaler fit(const Tensor& features);
  Tensor apply(const Tensor& features) const;
  bool empty() const { return lo.empty(); }
};

} // namespace avda
