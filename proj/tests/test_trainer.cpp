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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "avda/error.hpp"
#include "avda/trainer.hpp"

using namespace avda;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.classes = 2;
  c.latent_dim = 3;
  c.hidden = {8};
  c.batch_size = 16;
  c.source_epochs = 3;
  c.adaptation_epochs = 2;
  c.seed = 5;
  c.shots = 2;
  return c;
}

DomainPair tiny_pair(std::uint64_t seed = 1) {
  return gen_shifted_blobs(2, 2, 40, AffineShift{20.0, {0.3, -0.2}, 1.0}, 0.2, seed, 2.0);
}

std::map<Group, std::uint64_t> hashes(const ModelBundle& m) {
  std::map<Group, std::uint64_t> h;
  for (Group g : kAllGroups) h[g] = hash_group(m, g);
  return h;
}

std::set<Group> changed(const std::map<Group, std::uint64_t>& a, const std::map<Group, std::uint64_t>& b) {
  std::set<Group> out;
  for (Group g : kAllGroups) {
    if (a.at(g) != b.at(g)) out.insert(g);
  }
  return out;
}

Batch batch_of(const DomainDataset& ds, const ModelBundle& m, bool with_labels) {
  Batch b{m.scaler.apply(ds.features), {}};
  if (with_labels) {
    for (auto y : *ds.labels) b.labels.push_back(static_cast<int>(y));
  }
  return b;
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / "avda_trainer_test";
  fs::create_directories(dir);
  return dir / name;
}

std::uint64_t fnv1a(const std::uint8_t* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()),
                                           static_cast<std::streamsize>(b.size()));
}

void reseal(std::vector<std::uint8_t>& b) {
  const std::size_t end = b.size() - 8;
  const std::uint64_t h = fnv1a(b.data(), end);
  for (int i = 0; i < 8; ++i) b[end + i] = static_cast<std::uint8_t>(h >> (8 * i));
}

} // namespace

TEST(PhaseIsolation, SourceStepMovesOnlySourceGroups) {
  for (bool fixed : {false, true}) {
    auto cfg = tiny_config();
    cfg.ablation.fixed_priors = fixed;
    const auto pair = tiny_pair();
    ModelBundle m = ModelBundle::init(cfg.bundle_shape(2), cfg.prior_radius, cfg.prior_init_sigma, 3);
    m.scaler = FeatureScaler::fit(pair.source.features);
    OptimizerSet opt;
    SourceTrainer t(cfg, m, opt);
    const auto before = hashes(m);
    t.step(batch_of(pair.source, m, true), 9);
    std::set<Group> expect{Group::source_encoder, Group::source_classifier, Group::decoder};
    if (!fixed) expect.insert(Group::prior);
    EXPECT_EQ(changed(before, hashes(m)), expect) << fixed;
  }
}

TEST(PhaseIsolation, AdaptationStepsMoveOnlyTheirGroups) {
  auto cfg = tiny_config();
  const auto pair = tiny_pair();
  ModelBundle m = ModelBundle::init(cfg.bundle_shape(2), cfg.prior_radius, cfg.prior_init_sigma, 3);
  m.scaler = FeatureScaler::fit(pair.source.features);
  OptimizerSet opt;
  AdaptationTrainer t(cfg, m, opt);
  const Batch src = batch_of(pair.source, m, true);
  const Batch tgt = batch_of(pair.target, m, false);
  Batch lab = batch_of(pair.target.subset({0, 1, 40, 41}), m, true);

  auto h0 = hashes(m);
  t.discriminator_step(src, tgt, 1);
  EXPECT_EQ(changed(h0, hashes(m)), std::set<Group>{Group::discriminator});

  h0 = hashes(m);
  t.target_step(lab, tgt, 2);
  EXPECT_EQ(changed(h0, hashes(m)), (std::set<Group>{Group::target_encoder, Group::target_classifier}));
}

TEST(PhaseIsolation, OptionalTargetGroups) {
  auto cfg = tiny_config();
  cfg.ablation.target_decoder = true;
  cfg.train_prior_on_target = true;
  const auto pair = tiny_pair();
  ModelBundle m = ModelBundle::init(cfg.bundle_shape(2), cfg.prior_radius, cfg.prior_init_sigma, 3);
  m.scaler = FeatureScaler::fit(pair.source.features);
  OptimizerSet opt;
  AdaptationTrainer t(cfg, m, opt);
  const auto h0 = hashes(m);
  t.target_step(Batch{Tensor(Shape{0, 2}), {}}, batch_of(pair.target, m, false), 2);
  EXPECT_EQ(changed(h0, hashes(m)), (std::set<Group>{Group::target_encoder, Group::target_classifier,
                                                     Group::decoder, Group::prior}));
}

TEST(SourceTraining, SeparableTwoClassReachesHighAccuracy) {
  auto cfg = tiny_config();
  cfg.source_epochs = 40;
  const auto pair = gen_shifted_blobs(2, 2, 100, AffineShift{}, 0.3, 4, 3.0);
  const auto run = train_source(cfg, pair.source);
  ASSERT_EQ(run.epochs.size(), 40u);
  EXPECT_GE(run.epochs.back().accuracy, 0.99);
  for (const auto& e : run.epochs) EXPECT_TRUE(std::isfinite(e.loss));
}

TEST(SourceTraining, SameSeedGivesIdenticalModel) {
  const auto cfg = tiny_config();
  const auto pair = tiny_pair();
  const auto a = train_source(cfg, pair.source);
  const auto b = train_source(cfg, pair.source);
  for (Group g : kAllGroups) EXPECT_EQ(hash_group(a.model, g), hash_group(b.model, g));
  auto other = cfg;
  other.seed = 6;
  const auto c = train_source(other, pair.source);
  EXPECT_NE(hash_group(a.model, Group::source_encoder), hash_group(c.model, Group::source_encoder));
}

TEST(SourceTraining, RejectsBadInputs) {
  auto cfg = tiny_config();
  auto pair = tiny_pair();
  DomainDataset unl = pair.source;
  unl.labels.reset();
  EXPECT_THROW(train_source(cfg, unl), ContractError);
  cfg.classes = 3;
  EXPECT_THROW(train_source(cfg, pair.source), ValidationError);
  cfg = tiny_config();
  cfg.batch_size = 0;
  EXPECT_THROW(train_source(cfg, pair.source), ValidationError);
}

TEST(Adaptation, RunsAndIsDeterministic) {
  const auto cfg = tiny_config();
  const auto pair = tiny_pair();
  const auto src = train_source(cfg, pair.source);
  const auto split = make_few_shot_split(pair.target, 2, 8);
  const auto a = train_adaptation(cfg, src.model, pair.source, pair.target, split, 8);
  const auto b = train_adaptation(cfg, src.model, pair.source, pair.target, split, 8);
  ASSERT_EQ(a.epochs.size(), 2u);
  ASSERT_TRUE(a.final_accuracy && a.source_only_accuracy);
  EXPECT_EQ(*a.final_accuracy, *b.final_accuracy);
  EXPECT_GE(*a.final_accuracy, 0.0);
  EXPECT_LE(*a.final_accuracy, 1.0);
  for (Group g : kAllGroups) EXPECT_EQ(hash_group(a.model, g), hash_group(b.model, g));
  // The source side is untouched by adaptation.
  for (Group g : {Group::source_encoder, Group::source_classifier, Group::decoder, Group::prior}) {
    EXPECT_EQ(hash_group(a.model, g), hash_group(src.model, g));
  }
}

TEST(Adaptation, RejectsInconsistentInputs) {
  const auto cfg = tiny_config();
  const auto pair = tiny_pair();
  const auto src = train_source(cfg, pair.source);
  const auto split = make_few_shot_split(pair.target, 2, 8);
  ModelBundle unfitted = src.model;
  unfitted.scaler = {};
  EXPECT_THROW(train_adaptation(cfg, unfitted, pair.source, pair.target, split, 1), ContractError);
  auto bad_split = split;
  bad_split.labeled_indices.pop_back();
  EXPECT_THROW(train_adaptation(cfg, src.model, pair.source, pair.target, bad_split, 1), ContractError);
  const auto wide = gen_shifted_blobs(2, 3, 10, AffineShift{}, 0.1, 1);
  EXPECT_THROW(train_adaptation(cfg, src.model, pair.source, wide.target, FewShotSplit{}, 1), ValidationError);
}

TEST(Checkpoint, RoundTripIsByteIdenticalAndPredictsTheSame) {
  const auto cfg = tiny_config();
  const auto pair = tiny_pair();
  const auto run = train_source(cfg, pair.source);
  const Checkpoint ckpt{cfg, run.model, run.optim};
  const auto path = temp_file("rt.ckpt");
  checkpoint_save(ckpt, path);
  const Checkpoint back = checkpoint_load(path);
  EXPECT_EQ(checkpoint_bytes(back), checkpoint_bytes(ckpt));
  EXPECT_EQ(read_bytes(path), checkpoint_bytes(ckpt));
  const Tensor x = run.model.scaler.apply(pair.target.features);
  EXPECT_EQ(predict_class(back.model.source_encoder, back.model.source_classifier, x),
            predict_class(run.model.source_encoder, run.model.source_classifier, x));
  EXPECT_EQ(back.optim.states.size(), run.optim.states.size());
}

TEST(Checkpoint, CorruptionAndVersionMismatchAreReported) {
  const auto cfg = tiny_config();
  const auto run = train_source(cfg, tiny_pair().source);
  const auto good = checkpoint_bytes(Checkpoint{cfg, run.model, run.optim});

  auto flipped = good;
  flipped[flipped.size() / 2] ^= 0x40;
  write_bytes(temp_file("flip.ckpt"), flipped);
  EXPECT_THROW(checkpoint_load(temp_file("flip.ckpt")), FormatError);

  auto future = good;
  future[8] = 2;  // version follows the 8-byte magic
  reseal(future);
  write_bytes(temp_file("v2.ckpt"), future);
  try {
    checkpoint_load(temp_file("v2.ckpt"));
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("version 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 1"), std::string::npos) << msg;
  }

  write_bytes(temp_file("short.ckpt"), {1, 2, 3});
  EXPECT_THROW(checkpoint_load(temp_file("short.ckpt")), FormatError);
  EXPECT_THROW(checkpoint_load(temp_file("absent.ckpt")), IoError);
}

TEST(Numerics, NonFiniteParametersAreReported) {
  const auto cfg = tiny_config();
  ModelBundle m = ModelBundle::init(cfg.bundle_shape(2), cfg.prior_radius, cfg.prior_init_sigma, 3);
  EXPECT_NO_THROW(check_finite(m, "test"));
  m.discriminator.params[0][0] = std::nan("");
  try {
    check_finite(m, "test");
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("discriminator"), std::string::npos) << e.what();
  }
}
