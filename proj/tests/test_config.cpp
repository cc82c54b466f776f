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

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "avda/config.hpp"
#include "avda/error.hpp"

using namespace avda;

TEST(Config, DefaultsValidate) {
  const ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.latent_dim, 20u);
  EXPECT_EQ(c.weights.alpha_s, 1000.0);
  EXPECT_EQ(c.d_steps_per_t_step, 1u);
}

TEST(Config, CanonicalTextRoundTrips) {
  ExperimentConfig c;
  set_config_value(c, "hidden", "32,16,8");
  set_config_value(c, "gamma", "0.123456789012345");
  set_config_value(c, "seed", "18446744073709551615");
  set_config_value(c, "binary_discriminator", "true");
  set_config_value(c, "activation", "relu");
  set_config_value(c, "dataset", "two-moons");
  const std::string text = to_config_text(c);
  const ExperimentConfig back = parse_config(text);
  EXPECT_EQ(to_config_text(back), text);
  EXPECT_EQ(config_digest(back), config_digest(c));
  EXPECT_EQ(back.hidden, (std::vector<std::size_t>{32, 16, 8}));
  EXPECT_EQ(back.seed, 18446744073709551615ull);
  EXPECT_TRUE(back.ablation.binary_discriminator);
  EXPECT_EQ(back.weights.gamma, 0.123456789012345);
}

TEST(Config, EveryKeyHasAGetter) {
  const ExperimentConfig c;
  for (const auto& k : config_keys()) {
    ExperimentConfig d;
    EXPECT_NO_THROW(set_config_value(d, k, get_config_value(c, k))) << k;
  }
}

TEST(Config, ParseIgnoresCommentsAndBlankLines) {
  const auto c = parse_config("# header\n\n  classes = 3  \nseed=9 # trailing\n");
  EXPECT_EQ(c.classes, 3u);
  EXPECT_EQ(c.seed, 9u);
}

TEST(Config, DigestChangesWithAnyKey) {
  ExperimentConfig a, b;
  b.weights.tau = 2.5;
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(digest_hex(0xabcull), "0000000000000abc");
}

TEST(Config, ErrorsNameTheKey) {
  ExperimentConfig c;
  try {
    set_config_value(c, "batch_size", "many");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("batch_size"), std::string::npos);
  }
  EXPECT_THROW(set_config_value(c, "no_such_key", "1"), ValidationError);
  EXPECT_THROW(set_config_value(c, "fixed_priors", "maybe"), ValidationError);
  EXPECT_THROW(parse_config("classes 3\n"), ValidationError);
  c.weights.gamma = 1.5;
  try {
    c.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma"), std::string::npos);
  }
}

TEST(Config, LoadFromFile) {
  const auto p = std::filesystem::path(::testing::TempDir()) / "avda_cfg_test.conf";
  std::ofstream(p) << "latent_dim = 4\nhidden = 8\n";
  const auto c = load_config(p);
  EXPECT_EQ(c.latent_dim, 4u);
  EXPECT_EQ(c.bundle_shape(2).latent_dim, 4u);
  EXPECT_THROW(load_config(p.string() + ".missing"), IoError);
}

TEST(Config, LossOptionsFollowAblationFlags) {
  ExperimentConfig c;
  c.ablation.binary_discriminator = true;
  c.ablation.target_decoder = true;
  const auto o = c.loss_options();
  EXPECT_TRUE(o.binary_discriminator);
  EXPECT_TRUE(o.target_decoder);
  EXPECT_FALSE(o.train_prior_on_target);
}
