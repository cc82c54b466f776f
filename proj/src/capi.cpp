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

#include "avda/avda.h"

#include <chrono>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "avda/error.hpp"
#include "avda/eval.hpp"
#include "avda/trainer.hpp"

struct avda_config {
  avda::ExperimentConfig cfg;
};
struct avda_dataset {
  avda::DomainDataset ds;
};
struct avda_model {
  avda::Checkpoint ckpt;
};
struct avda_report {
  avda::RunReport report;
};

namespace {

thread_local std::string g_last_error;

struct NullArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct BufferTooSmall : std::length_error {
  using std::length_error::length_error;
};

template <class T>
const T& need(const T* p, const char* what) {
  if (!p) throw NullArgument(std::string(what) + " is null");
  return *p;
}
template <class T>
T& need(T* p, const char* what) {
  if (!p) throw NullArgument(std::string(what) + " is null");
  return *p;
}

const char* text(const char* p, const char* what) {
  if (!p) throw NullArgument(std::string(what) + " is null");
  return p;
}

template <class F>
avda_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return AVDA_OK;
  } catch (const NullArgument& e) {
    g_last_error = e.what();
    return AVDA_ERR_INVALID_ARGUMENT;
  } catch (const BufferTooSmall& e) {
    g_last_error = e.what();
    return AVDA_ERR_BUFFER_TOO_SMALL;
  } catch (const avda::ShapeError& e) {
    g_last_error = e.what();
    return AVDA_ERR_SHAPE;
  } catch (const avda::DomainError& e) {
    g_last_error = e.what();
    return AVDA_ERR_DOMAIN;
  } catch (const avda::ContractError& e) {
    g_last_error = e.what();
    return AVDA_ERR_CONTRACT;
  } catch (const avda::ParameterError& e) {
    g_last_error = e.what();
    return AVDA_ERR_PARAMETER;
  } catch (const avda::IndexError& e) {
    g_last_error = e.what();
    return AVDA_ERR_INDEX;
  } catch (const avda::ValidationError& e) {
    g_last_error = e.what();
    return AVDA_ERR_VALIDATION;
  } catch (const avda::FormatError& e) {
    g_last_error = e.what();
    return AVDA_ERR_FORMAT;
  } catch (const avda::IoError& e) {
    g_last_error = e.what();
    return AVDA_ERR_IO;
  } catch (const avda::NumericError& e) {
    g_last_error = e.what();
    return AVDA_ERR_NUMERIC;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return AVDA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AVDA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return AVDA_ERR_INTERNAL;
  }
}

void copy_out(const std::string& s, char* buf, std::size_t cap, std::size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || cap < s.size() + 1) {
    if (!buf && needed) return;
    throw BufferTooSmall("output buffer holds " + std::to_string(cap) + " bytes, " +
                         std::to_string(s.size() + 1) + " needed");
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
}

void write_text(const std::string& text, const char* path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw avda::IoError(std::string("cannot open '") + path + "' for writing");
  f << text;
  if (!f.flush()) throw avda::IoError(std::string("write failed for '") + path + "'");
}

// The adaptation config must describe the same networks as the checkpoint.
void require_same_architecture(const avda::ExperimentConfig& cfg, const avda::ExperimentConfig& model_cfg) {
  for (const char* key : {"classes", "latent_dim", "hidden", "activation"}) {
    const auto a = avda::get_config_value(cfg, key);
    const auto b = avda::get_config_value(model_cfg, key);
    if (a != b) {
      throw avda::ValidationError(std::string("config key '") + key + "' is " + a +
                                  " but the source model was trained with " + b);
    }
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

extern "C" {

const char* avda_version(void) { return "1.0.0"; }

const char* avda_status_string(avda_status status) {
  switch (status) {
    case AVDA_OK: return "ok";
    case AVDA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case AVDA_ERR_SHAPE: return "shape error";
    case AVDA_ERR_DOMAIN: return "domain error";
    case AVDA_ERR_CONTRACT: return "contract violation";
    case AVDA_ERR_PARAMETER: return "invalid parameter";
    case AVDA_ERR_INDEX: return "index out of range";
    case AVDA_ERR_VALIDATION: return "validation error";
    case AVDA_ERR_FORMAT: return "format error";
    case AVDA_ERR_IO: return "i/o error";
    case AVDA_ERR_NUMERIC: return "numeric error";
    case AVDA_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case AVDA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* avda_last_error(void) { return g_last_error.c_str(); }

avda_status avda_config_new(avda_config** out) {
  return guarded([&] { need(out, "out") = new avda_config{}; });
}

avda_status avda_config_load(const char* path, avda_config** out) {
  return guarded([&] {
    need(out, "out");
    auto cfg = avda::load_config(text(path, "path"));
    *out = new avda_config{std::move(cfg)};
  });
}

avda_status avda_config_set(avda_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    avda::set_config_value(need(cfg, "config").cfg, text(key, "key"), text(value, "value"));
  });
}

avda_status avda_config_get(const avda_config* cfg, const char* key, char* buf, size_t cap,
                            size_t* needed) {
  return guarded([&] {
    copy_out(avda::get_config_value(need(cfg, "config").cfg, text(key, "key")), buf, cap, needed);
  });
}

avda_status avda_config_validate(const avda_config* cfg) {
  return guarded([&] { need(cfg, "config").cfg.validate(); });
}

avda_status avda_config_to_text(const avda_config* cfg, char* buf, size_t cap, size_t* needed) {
  return guarded([&] { copy_out(avda::to_config_text(need(cfg, "config").cfg), buf, cap, needed); });
}

avda_status avda_config_digest(const avda_config* cfg, uint64_t* out) {
  return guarded([&] { need(out, "out") = avda::config_digest(need(cfg, "config").cfg); });
}

void avda_config_free(avda_config* cfg) { delete cfg; }

avda_status avda_dataset_generate(const char* preset, uint64_t seed, avda_dataset** source,
                                  avda_dataset** target) {
  return guarded([&] {
    need(source, "source");
    need(target, "target");
    auto pair = avda::gen_preset(text(preset, "preset"), seed);
    auto* s = new avda_dataset{std::move(pair.source)};
    *target = new avda_dataset{std::move(pair.target)};
    *source = s;
  });
}

avda_status avda_dataset_load(const char* path, avda_domain domain, int64_t classes,
                              avda_dataset** out) {
  return guarded([&] {
    need(out, "out");
    if (domain != AVDA_SOURCE && domain != AVDA_TARGET) {
      throw avda::ValidationError("unknown domain tag " + std::to_string(static_cast<int>(domain)));
    }
    std::optional<std::size_t> k;
    if (classes >= 0) k = static_cast<std::size_t>(classes);
    auto ds = avda::load_labeled_array(text(path, "path"), k, static_cast<avda::Domain>(domain));
    *out = new avda_dataset{std::move(ds)};
  });
}

avda_status avda_dataset_save(const avda_dataset* ds, const char* path) {
  return guarded([&] { avda::save_labeled_array(need(ds, "dataset").ds, text(path, "path")); });
}

avda_status avda_dataset_info(const avda_dataset* ds, size_t* rows, size_t* dim, size_t* classes,
                              int* labeled, avda_domain* domain) {
  return guarded([&] {
    const auto& d = need(ds, "dataset").ds;
    if (rows) *rows = d.size();
    if (dim) *dim = d.dim();
    if (classes) *classes = d.classes;
    if (labeled) *labeled = d.labeled() ? 1 : 0;
    if (domain) *domain = static_cast<avda_domain>(d.domain);
  });
}

void avda_dataset_free(avda_dataset* ds) { delete ds; }

avda_status avda_train_source(const avda_config* cfg, const avda_dataset* source,
                              avda_model** model, avda_report** report) {
  return guarded([&] {
    need(model, "model");
    const auto& c = need(cfg, "config").cfg;
    const auto t0 = std::chrono::steady_clock::now();
    auto run = avda::train_source(c, need(source, "source dataset").ds);
    avda::RunReport r;
    r.config_digest = avda::config_digest(c);
    r.seed = c.seed;
    r.shots = c.shots;
    r.source_epochs = std::move(run.epochs);
    r.wall_clock_seconds = seconds_since(t0);
    auto* m = new avda_model{{c, std::move(run.model), std::move(run.optim)}};
    if (report) {
      try {
        *report = new avda_report{std::move(r)};
      } catch (...) {
        delete m;
        throw;
      }
    }
    *model = m;
  });
}

avda_status avda_adapt(const avda_config* cfg, const avda_model* source_model,
                       const avda_dataset* source, const avda_dataset* target, uint64_t seed,
                       avda_model** adapted, avda_report** report) {
  return guarded([&] {
    need(adapted, "adapted");
    const auto& c = need(cfg, "config").cfg;
    const auto& sm = need(source_model, "source model").ckpt;
    const auto& tgt = need(target, "target dataset").ds;
    c.validate();
    require_same_architecture(c, sm.config);
    const auto t0 = std::chrono::steady_clock::now();
    avda::FewShotSplit split;
    if (c.shots > 0) {
      split = avda::make_few_shot_split(tgt, c.shots, seed);
    } else {
      for (std::size_t i = 0; i < tgt.size(); ++i) split.unlabeled_indices.push_back(i);
    }
    auto run = avda::train_adaptation(c, sm.model, need(source, "source dataset").ds, tgt, split, seed);
    avda::RunReport r;
    r.config_digest = avda::config_digest(c);
    r.seed = seed;
    r.shots = c.shots;
    r.adaptation_epochs = std::move(run.epochs);
    r.source_only_accuracy = run.source_only_accuracy;
    r.final_accuracy = run.final_accuracy;
    r.wall_clock_seconds = seconds_since(t0);
    auto* m = new avda_model{{c, std::move(run.model), std::move(run.optim)}};
    if (report) {
      try {
        *report = new avda_report{std::move(r)};
      } catch (...) {
        delete m;
        throw;
      }
    }
    *adapted = m;
  });
}

avda_status avda_shots_curve(const avda_config* cfg, const avda_model* source_model,
                             const avda_dataset* source, const avda_dataset* target,
                             const size_t* shots, size_t n_shots, size_t n_seeds,
                             const char* csv_path) {
  return guarded([&] {
    const auto& c = need(cfg, "config").cfg;
    const auto& sm = need(source_model, "source model").ckpt;
    need(shots, "shots");
    text(csv_path, "csv path");
    c.validate();
    require_same_architecture(c, sm.config);
    const auto rows = avda::run_shots_curve(c, sm.model, need(source, "source dataset").ds,
                                            need(target, "target dataset").ds,
                                            std::span<const std::size_t>(shots, n_shots), n_seeds);
    write_text(avda::shots_curve_csv(rows), csv_path);
  });
}

avda_status avda_model_save(const avda_model* model, const char* path) {
  return guarded([&] { avda::checkpoint_save(need(model, "model").ckpt, text(path, "path")); });
}

avda_status avda_model_load(const char* path, avda_model** out) {
  return guarded([&] {
    need(out, "out");
    auto ckpt = avda::checkpoint_load(text(path, "path"));
    *out = new avda_model{std::move(ckpt)};
  });
}

avda_status avda_model_config(const avda_model* model, avda_config** out) {
  return guarded([&] { need(out, "out") = new avda_config{need(model, "model").ckpt.config}; });
}

avda_status avda_model_predict(const avda_model* model, const avda_dataset* ds, size_t* labels,
                               size_t cap) {
  return guarded([&] {
    const auto& m = need(model, "model").ckpt.model;
    const auto& d = need(ds, "dataset").ds;
    need(labels, "labels");
    if (cap < d.size()) {
      throw BufferTooSmall("label buffer holds " + std::to_string(cap) + " entries, " +
                           std::to_string(d.size()) + " needed");
    }
    const bool src = d.domain == avda::Domain::source;
    const auto pred = avda::predict_class(src ? m.source_encoder : m.target_encoder,
                                          src ? m.source_classifier : m.target_classifier,
                                          m.scaler.apply(d.features));
    std::copy(pred.begin(), pred.end(), labels);
  });
}

avda_status avda_model_accuracy(const avda_model* model, const avda_dataset* ds, double* out) {
  return guarded([&] {
    need(out, "out") = avda::evaluate_accuracy(need(model, "model").ckpt.model, need(ds, "dataset").ds);
  });
}

avda_status avda_export_embeddings(const avda_model* model, const avda_dataset* ds, const char* path) {
  return guarded([&] {
    avda::export_embeddings(need(model, "model").ckpt.model, need(ds, "dataset").ds, text(path, "path"));
  });
}

void avda_model_free(avda_model* model) { delete model; }

avda_status avda_report_to_json(const avda_report* report, char* buf, size_t cap, size_t* needed) {
  return guarded([&] { copy_out(avda::report_to_json(need(report, "report").report), buf, cap, needed); });
}

avda_status avda_report_save(const avda_report* report, const char* path) {
  return guarded([&] { write_text(avda::report_to_json(need(report, "report").report), text(path, "path")); });
}

avda_status avda_report_final_accuracy(const avda_report* report, double* out, int* present) {
  return guarded([&] {
    const auto& r = need(report, "report").report;
    need(out, "out");
    need(present, "present");
    *present = r.final_accuracy.has_value() ? 1 : 0;
    *out = r.final_accuracy.value_or(0.0);
  });
}

void avda_report_free(avda_report* report) { delete report; }

} // extern "C"
