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

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "avda/avda.h"

namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / "avda_capi_test";
  fs::create_directories(dir);
  return (dir / name).string();
}

avda_config* tiny_config() {
  avda_config* cfg = nullptr;
  EXPECT_EQ(avda_config_new(&cfg), AVDA_OK);
  const char* kv[][2] = {{"classes", "3"},      {"latent_dim", "3"},        {"hidden", "8"},
                         {"source_epochs", "2"}, {"adaptation_epochs", "1"}, {"batch_size", "64"}};
  for (auto& [k, v] : kv) EXPECT_EQ(avda_config_set(cfg, k, v), AVDA_OK);
  return cfg;
}

} // namespace

TEST(CApi, VersionAndStatusStrings) {
  EXPECT_GT(std::strlen(avda_version()), 0u);
  EXPECT_STREQ(avda_status_string(AVDA_OK), "ok");
  EXPECT_GT(std::strlen(avda_status_string(AVDA_ERR_FORMAT)), 0u);
}

TEST(CApi, ConfigTextBuffers) {
  avda_config* cfg = tiny_config();
  size_t need = 0;
  EXPECT_EQ(avda_config_get(cfg, "classes", nullptr, 0, &need), AVDA_OK);
  EXPECT_EQ(need, 2u);
  char small[1];
  EXPECT_EQ(avda_config_get(cfg, "classes", small, sizeof small, &need), AVDA_ERR_BUFFER_TOO_SMALL);
  char buf[16];
  EXPECT_EQ(avda_config_get(cfg, "classes", buf, sizeof buf, nullptr), AVDA_OK);
  EXPECT_STREQ(buf, "3");

  EXPECT_EQ(avda_config_to_text(cfg, nullptr, 0, &need), AVDA_OK);
  std::vector<char> text(need);
  EXPECT_EQ(avda_config_to_text(cfg, text.data(), text.size(), nullptr), AVDA_OK);
  EXPECT_NE(std::string(text.data()).find("latent_dim = 3"), std::string::npos);

  EXPECT_EQ(avda_config_set(cfg, "gamma", "2"), AVDA_OK);
  EXPECT_EQ(avda_config_validate(cfg), AVDA_ERR_VALIDATION);
  EXPECT_NE(std::string(avda_last_error()).find("gamma"), std::string::npos);
  EXPECT_EQ(avda_config_set(cfg, "nope", "1"), AVDA_ERR_VALIDATION);
  uint64_t d = 0;
  EXPECT_EQ(avda_config_digest(cfg, &d), AVDA_OK);
  EXPECT_NE(d, 0u);
  avda_config_free(cfg);
}

TEST(CApi, NullArgumentsAreRejected) {
  EXPECT_EQ(avda_config_new(nullptr), AVDA_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(avda_config_validate(nullptr), AVDA_ERR_INVALID_ARGUMENT);
  avda_dataset* s = nullptr;
  EXPECT_EQ(avda_dataset_generate(nullptr, 1, &s, nullptr), AVDA_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(avda_model_load(nullptr, nullptr), AVDA_ERR_INVALID_ARGUMENT);
  avda_config_free(nullptr);
  avda_dataset_free(nullptr);
  avda_model_free(nullptr);
  avda_report_free(nullptr);
}

TEST(CApi, ErrorCodesFollowExceptionKinds) {
  avda_dataset *s = nullptr, *t = nullptr;
  EXPECT_EQ(avda_dataset_generate("no-such", 1, &s, &t), AVDA_ERR_VALIDATION);
  avda_model* m = nullptr;
  EXPECT_EQ(avda_model_load(temp_path("absent.ckpt").c_str(), &m), AVDA_ERR_IO);
  avda_config* cfg = nullptr;
  EXPECT_EQ(avda_config_load(temp_path("absent.conf").c_str(), &cfg), AVDA_ERR_IO);
}

TEST(CApi, EndToEndPipeline) {
  avda_config* cfg = tiny_config();
  avda_dataset *src = nullptr, *tgt = nullptr;
  ASSERT_EQ(avda_dataset_generate("rotated-blobs-small", 3, &src, &tgt), AVDA_OK);
  size_t rows = 0, dim = 0, classes = 0;
  int labeled = 0;
  avda_domain dom = AVDA_SOURCE;
  ASSERT_EQ(avda_dataset_info(tgt, &rows, &dim, &classes, &labeled, &dom), AVDA_OK);
  EXPECT_EQ(rows, 450u);
  EXPECT_EQ(dim, 2u);
  EXPECT_EQ(classes, 3u);
  EXPECT_EQ(labeled, 1);
  EXPECT_EQ(dom, AVDA_TARGET);

  avda_model* model = nullptr;
  avda_report* rep = nullptr;
  ASSERT_EQ(avda_train_source(cfg, src, &model, &rep), AVDA_OK) << avda_last_error();
  size_t need = 0;
  ASSERT_EQ(avda_report_to_json(rep, nullptr, 0, &need), AVDA_OK);
  EXPECT_GT(need, 10u);
  avda_report_free(rep);

  const std::string ckpt = temp_path("model.ckpt");
  ASSERT_EQ(avda_model_save(model, ckpt.c_str()), AVDA_OK);
  avda_model* loaded = nullptr;
  ASSERT_EQ(avda_model_load(ckpt.c_str(), &loaded), AVDA_OK);
  std::vector<size_t> a(rows), b(rows);
  ASSERT_EQ(avda_model_predict(model, src, a.data(), a.size()), AVDA_OK);
  ASSERT_EQ(avda_model_predict(loaded, src, b.data(), b.size()), AVDA_OK);
  EXPECT_EQ(a, b);
  EXPECT_EQ(avda_model_predict(model, src, a.data(), 3), AVDA_ERR_BUFFER_TOO_SMALL);

  ASSERT_EQ(avda_config_set(cfg, "shots", "1"), AVDA_OK);
  avda_model* adapted = nullptr;
  avda_report* arep = nullptr;
  ASSERT_EQ(avda_adapt(cfg, loaded, src, tgt, 4, &adapted, &arep), AVDA_OK) << avda_last_error();
  double acc = -1;
  int present = 0;
  ASSERT_EQ(avda_report_final_accuracy(arep, &acc, &present), AVDA_OK);
  EXPECT_EQ(present, 1);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
  double overall = -1;
  EXPECT_EQ(avda_model_accuracy(adapted, tgt, &overall), AVDA_OK);
  EXPECT_EQ(avda_report_save(arep, temp_path("adapt.json").c_str()), AVDA_OK);
  EXPECT_TRUE(fs::exists(temp_path("adapt.json")));

  const size_t grid[] = {0, 1};
  const std::string csv = temp_path("curve.csv");
  ASSERT_EQ(avda_shots_curve(cfg, loaded, src, tgt, grid, 2, 1, csv.c_str()), AVDA_OK) << avda_last_error();
  EXPECT_TRUE(fs::exists(csv));
  ASSERT_EQ(avda_export_embeddings(adapted, tgt, temp_path("emb.csv").c_str()), AVDA_OK);

  avda_config* other = nullptr;
  ASSERT_EQ(avda_config_new(&other), AVDA_OK);
  avda_model* bad = nullptr;
  avda_report* bad_rep = nullptr;
  EXPECT_EQ(avda_adapt(other, loaded, src, tgt, 4, &bad, &bad_rep), AVDA_ERR_VALIDATION);
  EXPECT_NE(std::string(avda_last_error()).size(), 0u);

  avda_config_free(other);
  avda_report_free(arep);
  avda_model_free(adapted);
  avda_model_free(loaded);
  avda_model_free(model);
  avda_dataset_free(src);
  avda_dataset_free(tgt);
  avda_config_free(cfg);
}
