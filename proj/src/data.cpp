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

#include "avda/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "avda/error.hpp"
#include "avda/rng.hpp"
#include "binary_io.hpp"

namespace avda {

namespace detail {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

} // namespace detail

namespace {

constexpr std::string_view kDataMagic = "AVDADATA";
constexpr std::uint32_t kDataVersion = 1;

} // namespace

std::string_view to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

Domain parse_domain(std::string_view text) {
  if (text == "source") return Domain::source;
  if (text == "target") return Domain::target;
  throw ValidationError("unknown domain '" + std::string(text) + "' (expected source or target)");
}

void DomainDataset::validate() const {
  if (features.rank() != 2) throw ValidationError("features must be a matrix");
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto row = features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        throw ValidationError("non-finite feature at row " + std::to_string(r) + ", column " +
                              std::to_string(c));
      }
    }
  }
  if (labels) {
    if (labels->size() != features.rows()) {
      throw ValidationError("label count " + std::to_string(labels->size()) + " != row count " +
                            std::to_string(features.rows()));
    }
    for (std::size_t r = 0; r < labels->size(); ++r) {
      if ((*labels)[r] >= classes) {
        throw ValidationError("label " + std::to_string((*labels)[r]) + " at row " +
                              std::to_string(r) + " out of range for " + std::to_string(classes) +
                              " classes");
      }
    }
  }
}

DomainDataset DomainDataset::subset(const std::vector<std::size_t>& indices) const {
  DomainDataset out;
  out.features = gather_rows(features, indices);
  out.domain = domain;
  out.classes = classes;
  if (labels) {
    std::vector<std::size_t> sub;
    sub.reserve(indices.size());
    for (auto i : indices) sub.push_back((*labels)[i]);
    out.labels = std::move(sub);
  }
  return out;
}

namespace {

void check_shift(const AffineShift& shift, std::size_t dim) {
  if (shift.scale == 0.0 || !std::isfinite(shift.scale)) {
    throw ParameterError("degenerate shift: scale must be finite and non-zero");
  }
  if (!shift.translation.empty() && shift.translation.size() != dim) {
    throw ParameterError("shift translation has " + std::to_string(shift.translation.size()) +
                         " entries for " + std::to_string(dim) + " features");
  }
}

void apply_shift(Tensor& x, const AffineShift& shift) {
  const double a = shift.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  const std::size_t d = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    if (d >= 2) {
      const double u = row[0], v = row[1];
      row[0] = c * u - s * v;
      row[1] = s * u + c * v;
    }
    for (std::size_t j = 0; j < d; ++j) {
      row[j] *= shift.scale;
      if (!shift.translation.empty()) row[j] += shift.translation[j];
    }
  }
}

Tensor blob_draw(std::size_t classes, std::size_t dim, std::size_t n_per_class, double sigma,
                 double radius, Rng& rng, std::vector<std::size_t>& labels) {
  Tensor x(Shape{classes * n_per_class, dim});
  labels.assign(classes * n_per_class, 0);
  Tensor noise = rng.normal(x.shape());
  for (std::size_t k = 0; k < classes; ++k) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(classes);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const std::size_t r = k * n_per_class + i;
      labels[r] = k;
      for (std::size_t j = 0; j < dim; ++j) x.at(r, j) = sigma * noise.at(r, j);
      x.at(r, 0) += radius * std::cos(a);
      x.at(r, 1) += radius * std::sin(a);
    }
  }
  return x;
}

Tensor moons_draw(std::size_t n, double noise_sigma, Rng& rng, std::vector<std::size_t>& labels) {
  const std::size_t n0 = (n + 1) / 2, n1 = n / 2;
  Tensor x(Shape{n, 2});
  labels.assign(n, 0);
  auto t_at = [](std::size_t i, std::size_t count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1)
                     : 0.0;
  };
  for (std::size_t i = 0; i < n0; ++i) {
    const double t = t_at(i, n0);
    x.at(i, 0) = std::cos(t);
    x.at(i, 1) = std::sin(t);
  }
  for (std::size_t i = 0; i < n1; ++i) {
    const double t = t_at(i, n1);
    x.at(n0 + i, 0) = 1.0 - std::cos(t);
    x.at(n0 + i, 1) = 0.5 - std::sin(t);
    labels[n0 + i] = 1;
  }
  if (noise_sigma > 0.0) {
    Tensor noise = rng.normal(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise_sigma * noise[i];
  }
  return x;
}

} // namespace

DomainPair gen_shifted_blobs(std::size_t classes, std::size_t dim, std::size_t n_per_class,
                             const AffineShift& shift, double noise_sigma, std::uint64_t seed,
                             double center_radius) {
  if (classes < 2) throw ParameterError("gen_shifted_blobs needs K >= 2");
  if (dim < 2) throw ParameterError("gen_shifted_blobs needs D >= 2");
  if (n_per_class < 1) throw ParameterError("gen_shifted_blobs needs n_per_class >= 1");
  if (!(noise_sigma >= 0.0)) throw ParameterError("noise sigma must be >= 0");
  check_shift(shift, dim);

  DomainPair pair;
  Rng src_rng(derive_seed(seed, "blobs/source"));
  Rng tgt_rng(derive_seed(seed, "blobs/target"));
  std::vector<std::size_t> ys, yt;
  pair.source.features = blob_draw(classes, dim, n_per_class, noise_sigma, center_radius, src_rng, ys);
  pair.target.features = blob_draw(classes, dim, n_per_class, noise_sigma, center_radius, tgt_rng, yt);
  apply_shift(pair.target.features, shift);
  pair.source.labels = std::move(ys);
  pair.target.labels = std::move(yt);
  pair.source.classes = pair.target.classes = classes;
  pair.source.domain = Domain::source;
  pair.target.domain = Domain::target;
  return pair;
}

DomainPair gen_two_moons_pair(std::size_t n, const AffineShift& shift, double noise,
                              std::uint64_t seed) {
  if (n < 2) throw ParameterError("gen_two_moons_pair needs n >= 2");
  if (!(noise >= 0.0)) throw ParameterError("noise must be >= 0");
  check_shift(shift, 2);

  DomainPair pair;
  Rng src_rng(derive_seed(seed, "moons/source"));
  Rng tgt_rng(derive_seed(seed, "moons/target"));
  std::vector<std::size_t> ys, yt;
  pair.source.features = moons_draw(n, noise, src_rng, ys);
  pair.target.features = moons_draw(n, noise, tgt_rng, yt);
  apply_shift(pair.target.features, shift);
  pair.source.labels = std::move(ys);
  pair.target.labels = std::move(yt);
  pair.source.classes = pair.target.classes = 2;
  pair.source.domain = Domain::source;
  pair.target.domain = Domain::target;
  return pair;
}

std::vector<std::string> preset_names() {
  return {"rotated-blobs", "rotated-blobs-small", "two-moons"};
}

DomainPair gen_preset(std::string_view name, std::uint64_t seed) {
  // Frozen benchmark definitions; the acceptance thresholds are calibrated
  // against these exact values.
  const AffineShift blob_shift{30.0, {0.85, -0.5}, 1.0};
  if (name == "rotated-blobs") return gen_shifted_blobs(3, 2, 1000, blob_shift, 0.25, seed);
  if (name == "rotated-blobs-small") return gen_shifted_blobs(3, 2, 150, blob_shift, 0.25, seed);
  if (name == "two-moons") return gen_two_moons_pair(1000, AffineShift{25.0, {0.3, 0.2}, 1.0}, 0.1, seed);
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                        : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

DomainDataset load_csv(const std::string& path, std::optional<std::size_t> classes, Domain domain) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file (missing header)");

  const auto header = split_csv(trim(line));
  std::size_t dim = 0;
  bool has_label = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    if (name == "label" && c + 1 == header.size()) {
      has_label = true;
    } else if (name == "f" + std::to_string(c)) {
      ++dim;
    } else {
      throw ValidationError(path + ": header column " + std::to_string(c) + " is '" +
                            std::string(name) + "', expected 'f" + std::to_string(c) + "'" +
                            (c + 1 == header.size() ? " or 'label'" : ""));
    }
  }
  if (dim == 0) throw ValidationError(path + ": header declares no feature columns");

  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto cells = split_csv(body);
    const std::size_t want = dim + (has_label ? 1 : 0);
    if (cells.size() != want) {
      throw ValidationError(path + ": row " + std::to_string(row + 1) + " (line " +
                            std::to_string(line_no) + ") has " + std::to_string(cells.size()) +
                            " columns, expected " + std::to_string(want));
    }
    for (std::size_t c = 0; c < dim; ++c) {
      const auto cell = trim(cells[c]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ValidationError(path + ": row " + std::to_string(row + 1) + ", column " +
                              std::to_string(c) + ": malformed or non-finite value '" +
                              std::string(cell) + "'");
      }
      values.push_back(v);
    }
    if (has_label) {
      const auto cell = trim(cells[dim]);
      long long v = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || v < 0) {
        throw ValidationError(path + ": row " + std::to_string(row + 1) + ": invalid label '" +
                              std::string(cell) + "'");
      }
      if (classes && static_cast<std::size_t>(v) >= *classes) {
        throw ValidationError(path + ": row " + std::to_string(row + 1) + ": label " +
                              std::to_string(v) + " out of range for " + std::to_string(*classes) +
                              " classes");
      }
      labels.push_back(static_cast<std::size_t>(v));
    }
    ++row;
  }

  DomainDataset ds;
  ds.features = Tensor(Shape{row, dim}, std::move(values));
  ds.domain = domain;
  if (has_label) {
    std::size_t inferred = 0;
    for (auto l : labels) inferred = std::max(inferred, l + 1);
    ds.classes = classes.value_or(inferred);
    ds.labels = std::move(labels);
  } else {
    ds.classes = classes.value_or(0);
  }
  return ds;
}

DomainDataset load_binary(const std::string& path, const std::vector<std::uint8_t>& bytes,
                          std::optional<std::size_t> classes) {
  detail::ByteReader r(bytes, path);
  if (r.raw(kDataMagic.size()) != kDataMagic) throw FormatError(path + ": bad magic");
  const auto version = r.u32();
  if (version != kDataVersion) {
    throw FormatError(path + ": unsupported dataset format version " + std::to_string(version) +
                      " (expected " + std::to_string(kDataVersion) + ")");
  }
  r.verify_checksum();
  const auto stored_domain = r.u8();
  const bool has_labels = r.u8() != 0;
  r.u8();
  r.u8();
  const auto n = r.u64();
  const auto d = r.u64();
  const auto k = r.u64();
  const std::size_t need = n * d * 8 + (has_labels ? n * 8 : 0);
  if (r.remaining() != need) throw FormatError(path + ": payload size does not match header");

  DomainDataset ds;
  std::vector<double> values(n * d);
  for (auto& v : values) v = r.f64();
  ds.features = Tensor(Shape{n, d}, std::move(values));
  ds.domain = stored_domain == 0 ? Domain::source : Domain::target;
  ds.classes = classes.value_or(k);
  if (has_labels) {
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = r.u64();
      if (labels[i] >= ds.classes) {
        throw ValidationError(path + ": row " + std::to_string(i + 1) + ": label " +
                              std::to_string(labels[i]) + " out of range for " +
                              std::to_string(ds.classes) + " classes");
      }
    }
    ds.labels = std::move(labels);
  }
  return ds;
}

} // namespace

DomainDataset load_labeled_array(const std::filesystem::path& path,
                                 std::optional<std::size_t> classes, Domain domain) {
  const auto bytes = detail::read_file(path.string());
  DomainDataset ds;
  if (bytes.size() >= kDataMagic.size() &&
      std::equal(kDataMagic.begin(), kDataMagic.end(), bytes.begin())) {
    ds = load_binary(path.string(), bytes, classes);
  } else {
    ds = load_csv(path.string(), classes, domain);
  }
  ds.validate();
  return ds;
}

void save_labeled_array(const DomainDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  if (path.extension() == ".avdd") {
    detail::ByteWriter w;
    w.raw(kDataMagic);
    w.u32(kDataVersion);
    w.u8(static_cast<std::uint8_t>(ds.domain));
    w.u8(ds.labeled() ? 1 : 0);
    w.u8(0);
    w.u8(0);
    w.u64(ds.size());
    w.u64(ds.dim());
    w.u64(ds.classes);
    for (double v : ds.features.data()) w.f64(v);
    if (ds.labels) {
      for (auto l : *ds.labels) w.u64(l);
    }
    w.seal();
    detail::write_file(path.string(), w.bytes());
    return;
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (std::size_t c = 0; c < ds.dim(); ++c) out << (c ? "," : "") << 'f' << c;
  if (ds.labeled()) out << ",label";
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < ds.size(); ++r) {
    auto row = ds.features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", row[c]);
      out << (c ? "," : "") << buf;
    }
    if (ds.labeled()) out << ',' << (*ds.labels)[r];
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

FewShotSplit make_few_shot_split(const DomainDataset& ds, std::size_t shots, std::uint64_t seed) {
  if (!ds.labeled()) throw ContractError("few-shot split needs a labeled dataset");
  std::vector<std::vector<std::size_t>> by_class(ds.classes);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[(*ds.labels)[i]].push_back(i);

  Rng rng(derive_seed(seed, "few-shot-split"));
  FewShotSplit split;
  std::vector<bool> chosen(ds.size(), false);
  for (std::size_t c = 0; c < ds.classes; ++c) {
    auto& pool = by_class[c];
    if (pool.size() < shots) {
      throw ValidationError("class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                            " examples, fewer than shots = " + std::to_string(shots));
    }
    // Partial Fisher-Yates: the first `shots` slots become a uniform sample.
    for (std::size_t i = 0; i < shots; ++i) {
      const std::size_t j = i + rng.index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      chosen[pool[i]] = true;
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (chosen[i] ? split.labeled_indices : split.unlabeled_indices).push_back(i);
  }
  return split;
}

FeatureScaler FeatureScaler::fit(const Tensor& features) {
  FeatureScaler s;
  const std::size_t d = features.cols();
  s.lo.assign(d, 0.0);
  s.hi.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double lo = features.rows() ? features.at(0, c) : 0.0;
    double hi = lo;
    for (std::size_t r = 1; r < features.rows(); ++r) {
      lo = std::min(lo, features.at(r, c));
      hi = std::max(hi, features.at(r, c));
    }
    s.lo[c] = lo;
    s.hi[c] = hi;
  }
  return s;
}

Tensor FeatureScaler::apply(const Tensor& features) const {
  if (features.cols() != lo.size()) {
    throw ShapeError("scaler fitted on " + std::to_string(lo.size()) + " features, got " +
                     std::to_string(features.cols()));
  }
  Tensor out(features.shape());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < lo.size(); ++c) {
      const double span = hi[c] - lo[c];
      out.at(r, c) = span > 0.0 ? 2.0 * (features.at(r, c) - lo[c]) / span - 1.0 : 0.0;
    }
  }
  return out;
}

} // namespace avda
