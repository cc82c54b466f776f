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

#include "avda/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "avda/error.hpp"

namespace avda {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw ValidationError("config key '" + std::string(key) + "': invalid value '" +
                        std::string(value) + "' (expected " + std::string(want) + ")");
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::size_t> to_widths(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto part = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
    out.push_back(static_cast<std::size_t>(to_u64(key, part)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

// Accessors are written once against a mutable config; getters never write.
ExperimentConfig& mut(const ExperimentConfig& c) { return const_cast<ExperimentConfig&>(c); }

struct KeySpec {
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Member>
KeySpec double_key(Member member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) {
            std::invoke(member, c) = to_double(k, v);
          },
          [member](const ExperimentConfig& c) { return fmt_double(std::invoke(member, mut(c))); }};
}

template <typename Member>
KeySpec size_key(Member member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) {
            std::invoke(member, c) = static_cast<std::size_t>(to_u64(k, v));
          },
          [member](const ExperimentConfig& c) { return std::to_string(std::invoke(member, mut(c))); }};
}

template <typename Member>
KeySpec bool_key(Member member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) {
            std::invoke(member, c) = to_bool(k, v);
          },
          [member](const ExperimentConfig& c) { return fmt_bool(std::invoke(member, mut(c))); }};
}

const std::map<std::string, KeySpec, std::less<>>& key_table() {
  static const std::map<std::string, KeySpec, std::less<>> table = [] {
    std::map<std::string, KeySpec, std::less<>> t;
    t["alpha_s"] = double_key([](ExperimentConfig& c) -> double& { return c.weights.alpha_s; });
    t["alpha_t"] = double_key([](ExperimentConfig& c) -> double& { return c.weights.alpha_t; });
    t["gamma"] = double_key([](ExperimentConfig& c) -> double& { return c.weights.gamma; });
    t["tau"] = double_key([](ExperimentConfig& c) -> double& { return c.weights.tau; });
    t["classes"] = size_key(&ExperimentConfig::classes);
    t["latent_dim"] = size_key(&ExperimentConfig::latent_dim);
    t["prior_radius"] = double_key(&ExperimentConfig::prior_radius);
    t["prior_init_sigma"] = double_key(&ExperimentConfig::prior_init_sigma);
    t["batch_size"] = size_key(&ExperimentConfig::batch_size);
    t["source_epochs"] = size_key(&ExperimentConfig::source_epochs);
    t["adaptation_epochs"] = size_key(&ExperimentConfig::adaptation_epochs);
    t["d_steps_per_t_step"] = size_key(&ExperimentConfig::d_steps_per_t_step);
    t["shots"] = size_key(&ExperimentConfig::shots);
    t["threads"] = size_key(&ExperimentConfig::threads);
    t["seed"] = {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.seed = to_u64(k, v); },
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); }};
    t["fixed_priors"] = bool_key([](ExperimentConfig& c) -> bool& { return c.ablation.fixed_priors; });
    t["binary_discriminator"] =
        bool_key([](ExperimentConfig& c) -> bool& { return c.ablation.binary_discriminator; });
    t["target_decoder"] = bool_key([](ExperimentConfig& c) -> bool& { return c.ablation.target_decoder; });
    t["learn_class_weights"] = bool_key(&ExperimentConfig::learn_class_weights);
    t["train_prior_on_target"] = bool_key(&ExperimentConfig::train_prior_on_target);
    t["learning_rate"] = double_key([](ExperimentConfig& c) -> double& { return c.adam.learning_rate; });
    t["beta1"] = double_key([](ExperimentConfig& c) -> double& { return c.adam.beta1; });
    t["beta2"] = double_key([](ExperimentConfig& c) -> double& { return c.adam.beta2; });
    t["epsilon"] = double_key([](ExperimentConfig& c) -> double& { return c.adam.epsilon; });
    t["hidden"] = {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.hidden = to_widths(k, v); },
                   [](const ExperimentConfig& c) {
                     std::string s;
                     for (std::size_t i = 0; i < c.hidden.size(); ++i) {
                       s += (i ? "," : "") + std::to_string(c.hidden[i]);
                     }
                     return s;
                   }};
    t["activation"] = {[](ExperimentConfig& c, std::string_view, std::string_view v) {
                         c.activation = parse_activation(v);
                       },
                       [](const ExperimentConfig& c) { return std::string(to_string(c.activation)); }};
    t["dataset"] = {[](ExperimentConfig& c, std::string_view, std::string_view v) { c.dataset = v; },
                    [](const ExperimentConfig& c) { return c.dataset; }};
    return t;
  }();
  return table;
}

} // namespace

void ExperimentConfig::validate() const {
  auto fail = [](std::string_view key, const std::string& why) {
    throw ValidationError("config key '" + std::string(key) + "': " + why);
  };
  if (!(weights.alpha_s >= 0.0)) fail("alpha_s", "must be >= 0");
  if (!(weights.alpha_t >= 0.0)) fail("alpha_t", "must be >= 0");
  if (!(weights.gamma >= 0.0 && weights.gamma <= 1.0)) fail("gamma", "must lie in [0, 1]");
  if (!(weights.tau > 0.0)) fail("tau", "must be > 0");
  if (classes < 2) fail("classes", "must be >= 2");
  if (latent_dim < 1) fail("latent_dim", "must be >= 1");
  if (!(prior_radius > 0.0)) fail("prior_radius", "must be > 0");
  if (!(prior_init_sigma > 0.0)) fail("prior_init_sigma", "must be > 0");
  if (hidden.empty()) fail("hidden", "needs at least one layer");
  for (auto w : hidden) {
    if (w < 1) fail("hidden", "widths must be >= 1");
  }
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (d_steps_per_t_step < 1) fail("d_steps_per_t_step", "must be >= 1");
  if (!(adam.learning_rate > 0.0)) fail("learning_rate", "must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) fail("beta1", "must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) fail("beta2", "must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) fail("epsilon", "must be > 0");
  if (threads < 1) fail("threads", "must be >= 1");
}

BundleShape ExperimentConfig::bundle_shape(std::size_t input_dim) const {
  BundleShape s;
  s.input_dim = input_dim;
  s.classes = classes;
  s.latent_dim = latent_dim;
  s.hidden = hidden;
  s.activation = activation;
  s.binary_discriminator = ablation.binary_discriminator;
  return s;
}

LossOptions ExperimentConfig::loss_options() const {
  LossOptions o;
  o.train_prior_on_target = train_prior_on_target && !ablation.fixed_priors;
  o.binary_discriminator = ablation.binary_discriminator;
  o.target_decoder = ablation.target_decoder;
  return o;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = key_table();
  auto it = table.find(trim(key));
  if (it == table.end()) throw ValidationError("unknown config key '" + std::string(key) + "'");
  it->second.set(cfg, it->first, trim(value));
}

std::string get_config_value(const ExperimentConfig& cfg, std::string_view key) {
  const auto& table = key_table();
  auto it = table.find(key);
  if (it == table.end()) throw ValidationError("unknown config key '" + std::string(key) + "'");
  return it->second.get(cfg);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : key_table()) keys.push_back(k);
  return keys;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? text.npos : nl - start);
    ++line_no;
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, spec] : key_table()) out += k + " = " + spec.get(cfg) + "\n";
  return out;
}

std::uint64_t config_digest(const ExperimentConfig& cfg) {
  const std::string text = to_config_text(cfg);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

} // namespace avda
