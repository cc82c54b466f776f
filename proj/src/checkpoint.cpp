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

#include <map>
#include <string>

#include "avda/error.hpp"
#include "avda/trainer.hpp"
#include "binary_io.hpp"

namespace avda {

namespace {

constexpr std::string_view kMagic = "AVDACKPT";

void put_tensor(detail::ByteWriter& w, const std::string& name, const Tensor& t) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) w.u64(d);
  for (double v : t.data()) w.f64(v);
}

std::pair<std::string, Tensor> get_tensor(detail::ByteReader& r) {
  std::string name = r.str();
  const std::uint32_t rank = r.u32();
  if (rank > 2) throw FormatError("checkpoint: tensor '" + name + "' has rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) d = r.u64();
  const std::size_t n = numel(shape);
  if (n > r.remaining() / 8) throw FormatError("checkpoint: truncated data");
  std::vector<double> values(n);
  for (auto& v : values) v = r.f64();
  return {std::move(name), Tensor(shape, std::move(values))};
}

Group group_from_name(const std::string& name) {
  for (Group g : kAllGroups) {
    if (to_string(g) == name) return g;
  }
  throw FormatError("checkpoint: unknown parameter group '" + name + "'");
}

} // namespace

std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& ckpt) {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(kCheckpointVersion);
  w.u64(config_digest(ckpt.config));
  w.str(to_config_text(ckpt.config));
  w.u64(ckpt.model.shape.input_dim);
  w.u8(ckpt.model.shape.binary_discriminator ? 1 : 0);

  w.u32(static_cast<std::uint32_t>(ckpt.optim.states.size()));
  for (const auto& [g, s] : ckpt.optim.states) {
    w.str(std::string(to_string(g)));
    w.u64(s.step);
    w.f64(s.settings.learning_rate);
    w.f64(s.settings.beta1);
    w.f64(s.settings.beta2);
    w.f64(s.settings.epsilon);
  }

  std::vector<std::pair<std::string, const Tensor*>> blobs;
  std::vector<Tensor> scratch;
  scratch.push_back(Tensor(Shape{ckpt.model.scaler.lo.size()}, ckpt.model.scaler.lo));
  scratch.push_back(Tensor(Shape{ckpt.model.scaler.hi.size()}, ckpt.model.scaler.hi));
  for (Group g : kAllGroups) {
    const auto params = ckpt.model.group(g);
    for (std::size_t i = 0; i < params.size(); ++i) {
      blobs.emplace_back(std::string(to_string(g)) + "/" + std::to_string(i), params[i]);
    }
  }
  blobs.emplace_back("scaler/lo", &scratch[0]);
  blobs.emplace_back("scaler/hi", &scratch[1]);
  for (const auto& [g, s] : ckpt.optim.states) {
    const std::string base = "adam/" + std::string(to_string(g));
    for (std::size_t i = 0; i < s.m.size(); ++i) blobs.emplace_back(base + "/m/" + std::to_string(i), &s.m[i]);
    for (std::size_t i = 0; i < s.v.size(); ++i) blobs.emplace_back(base + "/v/" + std::to_string(i), &s.v[i]);
  }

  w.u32(static_cast<std::uint32_t>(blobs.size()));
  for (const auto& [name, t] : blobs) put_tensor(w, name, *t);
  w.seal();
  return w.bytes();
}

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path) {
  detail::write_file(path.string(), checkpoint_bytes(ckpt));
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path.string());
  const std::string what = "checkpoint " + path.string();
  detail::ByteReader r(bytes, what);
  if (bytes.size() < kMagic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic) {
    throw FormatError(what + ": not an AVDA checkpoint");
  }
  r.verify_checksum();
  r.raw(kMagic.size());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(what + ": unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t digest = r.u64();

  Checkpoint ckpt;
  ckpt.config = parse_config(r.str());
  if (config_digest(ckpt.config) != digest) throw FormatError(what + ": config digest mismatch");
  const std::size_t input_dim = r.u64();
  const bool binary = r.u8() != 0;

  BundleShape shape = ckpt.config.bundle_shape(input_dim);
  shape.binary_discriminator = binary;
  ckpt.model = ModelBundle::init(shape, ckpt.config.prior_radius, ckpt.config.prior_init_sigma, 0);

  const std::uint32_t n_states = r.u32();
  for (std::uint32_t i = 0; i < n_states; ++i) {
    AdamState& s = ckpt.optim.states[group_from_name(r.str())];
    s.step = r.u64();
    s.settings.learning_rate = r.f64();
    s.settings.beta1 = r.f64();
    s.settings.beta2 = r.f64();
    s.settings.epsilon = r.f64();
  }

  std::map<std::string, Tensor> blobs;
  const std::uint32_t n_blobs = r.u32();
  for (std::uint32_t i = 0; i < n_blobs; ++i) {
    auto [name, t] = get_tensor(r);
    if (!blobs.emplace(name, std::move(t)).second) throw FormatError(what + ": duplicate tensor '" + name + "'");
  }
  if (!r.at_end()) throw FormatError(what + ": trailing bytes");

  auto take = [&](const std::string& name) {
    auto it = blobs.find(name);
    if (it == blobs.end()) throw FormatError(what + ": missing tensor '" + name + "'");
    Tensor t = std::move(it->second);
    blobs.erase(it);
    return t;
  };

  for (Group g : kAllGroups) {
    auto params = ckpt.model.group(g);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string name = std::string(to_string(g)) + "/" + std::to_string(i);
      Tensor t = take(name);
      if (t.shape() != params[i]->shape()) {
        throw FormatError(what + ": tensor '" + name + "' has shape " + shape_str(t.shape()) +
                          ", expected " + shape_str(params[i]->shape()));
      }
      *params[i] = std::move(t);
    }
  }
  const Tensor lo = take("scaler/lo");
  const Tensor hi = take("scaler/hi");
  if (lo.size() != hi.size() || (lo.size() != 0 && lo.size() != input_dim)) {
    throw FormatError(what + ": scaler does not match input width");
  }
  ckpt.model.scaler.lo = lo.buffer();
  ckpt.model.scaler.hi = hi.buffer();

  for (auto& [g, s] : ckpt.optim.states) {
    const std::string base = "adam/" + std::string(to_string(g));
    const auto params = ckpt.model.group(g);
    for (std::size_t i = 0; blobs.count(base + "/m/" + std::to_string(i)); ++i) {
      s.m.push_back(take(base + "/m/" + std::to_string(i)));
      s.v.push_back(take(base + "/v/" + std::to_string(i)));
    }
    if (!s.m.empty() && s.m.size() != params.size()) {
      throw FormatError(what + ": Adam state for " + base + " does not match the parameters");
    }
    for (std::size_t i = 0; i < s.m.size(); ++i) {
      if (s.m[i].shape() != params[i]->shape() || s.v[i].shape() != params[i]->shape()) {
        throw FormatError(what + ": Adam moment shape mismatch in " + base);
      }
    }
  }
  if (!blobs.empty()) throw FormatError(what + ": unexpected tensor '" + blobs.begin()->first + "'");
  return ckpt;
}

} // namespace avda
