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

// Command-line front end. Talks to the library only through avda.h.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "avda/avda.h"

namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(avda_status s, const std::string& context) {
  if (s != AVDA_OK) {
    throw Failure(context + ": " + avda_status_string(s) + ": " + avda_last_error());
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<avda_config, Deleter<avda_config, avda_config_free>>;
using Dataset = std::unique_ptr<avda_dataset, Deleter<avda_dataset, avda_dataset_free>>;
using Model = std::unique_ptr<avda_model, Deleter<avda_model, avda_model_free>>;
using Report = std::unique_ptr<avda_report, Deleter<avda_report, avda_report_free>>;

// Relative output locations live under $AVDA_RUN_ROOT when it is set.
fs::path output_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* root = std::getenv("AVDA_RUN_ROOT"); root && *root) path = fs::path(root) / path;
  }
  return path;
}

fs::path output_dir(const std::string& p) {
  fs::path dir = output_path(p);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw Failure("missing required input: " + what);
  if (!fs::exists(path)) throw Failure(what + " '" + path + "' does not exist");
}

std::string config_value(const avda_config* cfg, const char* key) {
  std::size_t n = 0;
  check(avda_config_get(cfg, key, nullptr, 0, &n), "config");
  std::string s(n, '\0');
  check(avda_config_get(cfg, key, s.data(), n, nullptr), "config");
  s.resize(n - 1);
  return s;
}

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "config file (key = value lines)");
    cmd->add_option("--set", sets, "override one config key, key=value (repeatable)");
  }

  Config build() const {
    avda_config* raw = nullptr;
    if (path.empty()) {
      check(avda_config_new(&raw), "config");
    } else {
      check(avda_config_load(path.c_str(), &raw), "config '" + path + "'");
    }
    Config cfg(raw);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Failure("--set expects key=value, got '" + kv + "'");
      const auto key = kv.substr(0, eq);
      check(avda_config_set(cfg.get(), key.c_str(), kv.substr(eq + 1).c_str()), "--set " + key);
    }
    check(avda_config_validate(cfg.get()), "config");
    return cfg;
  }
};

// Reads a dataset file, or generates the configured preset when no file is
// given.
struct DataArgs {
  std::string source;
  std::string target;

  void attach(CLI::App* cmd, bool with_target) {
    cmd->add_option("--source", source, "source dataset (.csv or .avdd); default: config preset");
    if (with_target) {
      cmd->add_option("--target", target, "target dataset (.csv or .avdd); default: config preset");
    }
  }

  std::pair<Dataset, Dataset> load(const avda_config* cfg) const {
    const auto classes = std::stoll(config_value(cfg, "classes"));
    Dataset src, tgt;
    if (source.empty() || target.empty()) {
      const auto preset = config_value(cfg, "dataset");
      const auto seed = std::stoull(config_value(cfg, "seed"));
      avda_dataset *s = nullptr, *t = nullptr;
      check(avda_dataset_generate(preset.c_str(), seed, &s, &t), "preset '" + preset + "'");
      src.reset(s);
      tgt.reset(t);
    }
    if (!source.empty()) src = read(source, AVDA_SOURCE, classes);
    if (!target.empty()) tgt = read(target, AVDA_TARGET, classes);
    return {std::move(src), std::move(tgt)};
  }

  static Dataset read(const std::string& path, avda_domain domain, long long classes) {
    require_file(path, domain == AVDA_SOURCE ? "source dataset" : "target dataset");
    avda_dataset* raw = nullptr;
    check(avda_dataset_load(path.c_str(), domain, classes, &raw), "dataset '" + path + "'");
    return Dataset(raw);
  }
};

Model load_model(const std::string& path) {
  require_file(path, "source checkpoint (--checkpoint)");
  avda_model* raw = nullptr;
  check(avda_model_load(path.c_str(), &raw), "checkpoint '" + path + "'");
  return Model(raw);
}

void save_report(const avda_report* report, const fs::path& path) {
  check(avda_report_save(report, path.string().c_str()), "report");
  std::printf("wrote %s\n", path.string().c_str());
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw Failure("--shots: '" + item + "' is not a non-negative integer");
    }
    grid.push_back(std::stoull(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return grid;
}

int run(int argc, char** argv) {
  CLI::App app{"Adversarial variational domain adaptation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", avda_version());

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write a synthetic source/target pair");
  std::string gen_preset = "rotated-blobs", gen_out, gen_format = "csv";
  std::uint64_t gen_seed = 0;
  gen->add_option("--preset", gen_preset, "generator preset")->capture_default_str();
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--format", gen_format, "csv or avdd")->check(CLI::IsMember({"csv", "avdd"}))->capture_default_str();

  // train-source
  auto* train = app.add_subcommand("train-source", "train the source model");
  ConfigArgs train_cfg;
  DataArgs train_data;
  std::string train_out;
  train_cfg.attach(train);
  train_data.attach(train, false);
  train->add_option("--out", train_out, "run directory")->required();

  // adapt
  auto* adapt = app.add_subcommand("adapt", "adapt a source checkpoint to the target domain");
  ConfigArgs adapt_cfg;
  DataArgs adapt_data;
  std::string adapt_ckpt, adapt_out;
  std::uint64_t adapt_seed = 0;
  adapt_cfg.attach(adapt);
  adapt_data.attach(adapt, true);
  adapt->add_option("--checkpoint", adapt_ckpt, "source checkpoint from train-source");
  adapt->add_option("--seed", adapt_seed, "split and adaptation seed")->capture_default_str();
  adapt->add_option("--out", adapt_out, "run directory")->required();

  // shots-curve
  auto* curve = app.add_subcommand("shots-curve", "accuracy against labeled target shots");
  ConfigArgs curve_cfg;
  DataArgs curve_data;
  std::string curve_ckpt, curve_out, curve_shots = "0,1,5,10,25,50";
  std::size_t curve_seeds = 10;
  curve_cfg.attach(curve);
  curve_data.attach(curve, true);
  curve->add_option("--checkpoint", curve_ckpt, "source checkpoint; trained on the fly when absent");
  curve->add_option("--shots", curve_shots, "comma-separated shots grid")->capture_default_str();
  curve->add_option("--seeds", curve_seeds, "seeds per grid point")->capture_default_str()->check(CLI::PositiveNumber);
  curve->add_option("--out", curve_out, "run directory")->required();

  // export-embeddings
  auto* emb = app.add_subcommand("export-embeddings", "write posterior means as CSV");
  std::string emb_ckpt, emb_data, emb_domain = "target", emb_out;
  emb->add_option("--checkpoint", emb_ckpt, "model checkpoint")->required();
  emb->add_option("--data", emb_data, "dataset file")->required();
  emb->add_option("--domain", emb_domain, "source or target")->check(CLI::IsMember({"source", "target"}))->capture_default_str();
  emb->add_option("--out", emb_out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    avda_dataset *s = nullptr, *t = nullptr;
    check(avda_dataset_generate(gen_preset.c_str(), gen_seed, &s, &t), "preset '" + gen_preset + "'");
    Dataset src(s), tgt(t);
    const fs::path dir = output_dir(gen_out);
    const std::string ext = "." + gen_format;
    const fs::path sp = dir / ("source" + ext), tp = dir / ("target" + ext);
    check(avda_dataset_save(src.get(), sp.string().c_str()), "write " + sp.string());
    check(avda_dataset_save(tgt.get(), tp.string().c_str()), "write " + tp.string());
    std::size_t n_s = 0, n_t = 0, dim = 0, classes = 0;
    check(avda_dataset_info(src.get(), &n_s, &dim, &classes, nullptr, nullptr), "dataset");
    check(avda_dataset_info(tgt.get(), &n_t, nullptr, nullptr, nullptr, nullptr), "dataset");
    nlohmann::json manifest = {{"preset", gen_preset},
                               {"seed", gen_seed},
                               {"classes", classes},
                               {"dim", dim},
                               {"source", {{"file", sp.filename().string()}, {"rows", n_s}}},
                               {"target", {{"file", tp.filename().string()}, {"rows", n_t}}}};
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
    std::printf("wrote %s, %s and manifest.json\n", sp.string().c_str(), tp.string().c_str());
    return 0;
  }

  if (train->parsed()) {
    Config cfg = train_cfg.build();
    auto [src, tgt] = train_data.load(cfg.get());
    const fs::path dir = output_dir(train_out);
    avda_model* m = nullptr;
    avda_report* r = nullptr;
    check(avda_train_source(cfg.get(), src.get(), &m, &r), "train-source");
    Model model(m);
    Report report(r);
    const fs::path ckpt = dir / "source.ckpt";
    check(avda_model_save(model.get(), ckpt.string().c_str()), "write " + ckpt.string());
    std::printf("wrote %s\n", ckpt.string().c_str());
    save_report(report.get(), dir / "source_report.json");
    double acc = 0.0;
    check(avda_model_accuracy(model.get(), src.get(), &acc), "evaluate");
    std::printf("source accuracy %.4f\n", acc);
    return 0;
  }

  if (adapt->parsed()) {
    Model source_model = load_model(adapt_ckpt);
    Config cfg = adapt_cfg.build();
    auto [src, tgt] = adapt_data.load(cfg.get());
    const fs::path dir = output_dir(adapt_out);
    avda_model* m = nullptr;
    avda_report* r = nullptr;
    check(avda_adapt(cfg.get(), source_model.get(), src.get(), tgt.get(), adapt_seed, &m, &r), "adapt");
    Model model(m);
    Report report(r);
    const fs::path ckpt = dir / "adapted.ckpt";
    check(avda_model_save(model.get(), ckpt.string().c_str()), "write " + ckpt.string());
    std::printf("wrote %s\n", ckpt.string().c_str());
    save_report(report.get(), dir / "adapt_report.json");
    double acc = 0.0;
    int present = 0;
    check(avda_report_final_accuracy(report.get(), &acc, &present), "report");
    if (present) std::printf("target accuracy %.4f\n", acc);
    return 0;
  }

  if (curve->parsed()) {
    const auto grid = parse_grid(curve_shots);
    Config cfg = curve_cfg.build();
    auto [src, tgt] = curve_data.load(cfg.get());
    const fs::path dir = output_dir(curve_out);
    Model source_model;
    if (curve_ckpt.empty()) {
      avda_model* m = nullptr;
      check(avda_train_source(cfg.get(), src.get(), &m, nullptr), "train-source");
      source_model.reset(m);
    } else {
      source_model = load_model(curve_ckpt);
    }
    const fs::path csv = dir / "shots_curve.csv";
    check(avda_shots_curve(cfg.get(), source_model.get(), src.get(), tgt.get(), grid.data(),
                           grid.size(), curve_seeds, csv.string().c_str()),
          "shots-curve");
    std::printf("wrote %s\n", csv.string().c_str());
    return 0;
  }

  if (emb->parsed()) {
    Model model = load_model(emb_ckpt);
    Config cfg;
    {
      avda_config* raw = nullptr;
      check(avda_model_config(model.get(), &raw), "checkpoint config");
      cfg.reset(raw);
    }
    const avda_domain domain = emb_domain == "source" ? AVDA_SOURCE : AVDA_TARGET;
    Dataset ds = DataArgs::read(emb_data, domain, std::stoll(config_value(cfg.get(), "classes")));
    const fs::path out = output_path(emb_out);
    if (out.has_parent_path()) output_dir(out.parent_path().string());
    check(avda_export_embeddings(model.get(), ds.get(), out.string().c_str()), "export-embeddings");
    std::printf("wrote %s\n", out.string().c_str());
    return 0;
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "avda: error: %s\n", e.what());
    return 1;
  }
}
