// Copyright 2026 The fermipca Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fermipca/calibration.hpp"
#include "fermipca/covariance_model.hpp"
#include "fermipca/errors.hpp"
#include "fermipca/inference.hpp"
#include "fermipca/numeric.hpp"
#include "fermipca/rng.hpp"
#include "fermipca/soft_filter.hpp"
#include "fermipca/thermal_measurement.hpp"

#ifndef FERMIPCA_VERSION
#define FERMIPCA_VERSION "0.0.0"
#endif

namespace fermipca::io {

using Json = nlohmann::ordered_json;

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::uint64_t parse_hex64(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 16);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("malformed hash '" + s + "'");
  }
}

// ---------------------------------------------------------------------------
// Raw file access.

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

inline std::uint64_t content_hash(const std::string& bytes) { return fnv1a(bytes); }

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// Typed field access with a validation error naming the missing key.
template <class T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("field '") + key + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Complex encodings.

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ValidationError("complex entries must be [re, im] pairs");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json to_json(const CVector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(to_json(v(i)));
  return a;
}

inline CVector cvector_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of [re, im] pairs");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

/// Row-major list of rows of [re, im] pairs.
inline Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(CVector(m.row(i).transpose())));
  return rows;
}

inline CMatrix cmatrix_from_json(const Json& j, Eigen::Index d) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != d) {
    throw ValidationError("matrix must have " + std::to_string(d) + " rows");
  }
  CMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const CVector row = cvector_from_json(j[static_cast<std::size_t>(i)]);
    if (row.size() != d) throw ValidationError("matrix row " + std::to_string(i) + " has the wrong length");
    m.row(i) = row.transpose();
  }
  return m;
}

inline Json to_json(const RVector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

inline RVector rvector_from_json(const Json& j) {
  std::vector<double> x;
  try {
    x = j.get<std::vector<double>>();
  } catch (const Json::exception&) {
    throw ValidationError("expected an array of numbers");
  }
  return Eigen::Map<RVector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

// ---------------------------------------------------------------------------
// Datasets.

/// CSV with header re_0,im_0,...,re_{d-1},im_{d-1}; one row per sample.
/// Rows are not checked for normalization here.
inline std::vector<CVector> parse_vectors_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(s);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  auto trim = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return s.substr(i);
  };
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw ValidationError("dataset CSV is empty");
  if (header.size() % 2 != 0) throw ValidationError("line " + std::to_string(lineno) + ": header needs re/im column pairs");
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string want = (c % 2 == 0 ? "re_" : "im_") + std::to_string(c / 2);
    if (trim(header[c]) != want) {
      throw ValidationError("line " + std::to_string(lineno) + ": expected header column '" + want + "', got '" +
                            trim(header[c]) + "'");
    }
  }
  const auto d = static_cast<Eigen::Index>(header.size() / 2);
  std::vector<CVector> vectors;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ValidationError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(cells.size()));
    }
    CVector v(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      double part[2];
      for (int r = 0; r < 2; ++r) {
        const std::string cell = trim(cells[static_cast<std::size_t>(2 * j + r)]);
        std::size_t used = 0;
        try {
          part[r] = std::stod(cell, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (cell.empty() || used != cell.size() || !std::isfinite(part[r])) {
          throw ValidationError("line " + std::to_string(lineno) + ": malformed number '" + cell + "'");
        }
      }
      v(j) = {part[0], part[1]};
    }
    vectors.push_back(std::move(v));
  }
  if (vectors.empty()) throw ValidationError("dataset CSV has a header but no rows");
  return vectors;
}

/// {"d": int, "vectors": [[[re, im], ...], ...]}.
inline std::vector<CVector> parse_vectors_json(const std::string& text) {
  const Json j = parse_json(text, "dataset JSON");
  const auto d = field<Eigen::Index>(j, "d");
  if (!j.contains("vectors") || !j["vectors"].is_array()) throw ValidationError("missing field 'vectors'");
  std::vector<CVector> vectors;
  for (const auto& row : j["vectors"]) {
    CVector v = cvector_from_json(row);
    if (v.size() != d) {
      throw ValidationError("dimension mismatch at vector " + std::to_string(vectors.size()) + ": expected " +
                            std::to_string(d) + ", got " + std::to_string(v.size()));
    }
    vectors.push_back(std::move(v));
  }
  return vectors;
}

inline FeatureDataset parse_dataset_csv(const std::string& text) { return FeatureDataset(parse_vectors_csv(text)); }
inline FeatureDataset parse_dataset_json(const std::string& text) { return FeatureDataset(parse_vectors_json(text)); }

/// Raw vectors from a .json or CSV file.
inline std::vector<CVector> load_vectors(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  if (path.extension() == ".json") return parse_vectors_json(text);
  return parse_vectors_csv(text);
}

inline FeatureDataset load_dataset(const std::filesystem::path& path) { return FeatureDataset(load_vectors(path)); }

inline std::string dataset_to_csv(const FeatureDataset& data) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Eigen::Index j = 0; j < data.dimension(); ++j) os << (j ? "," : "") << "re_" << j << ",im_" << j;
  os << "\n";
  for (const auto& v : data.vectors()) {
    for (Eigen::Index j = 0; j < v.size(); ++j) os << (j ? "," : "") << v(j).real() << "," << v(j).imag();
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Measurement configuration.

inline Json to_json(const MeasurementConfig& c) { return Json{{"t1", c.t1}, {"t2", c.t2}, {"delta", c.delta}}; }

inline MeasurementConfig config_from_json(const Json& j) {
  return MeasurementConfig(field<double>(j, "t1"), field<double>(j, "t2"), field<double>(j, "delta"));
}

/// Fingerprint of a configuration, used to reject mismatched deployments.
inline std::uint64_t config_hash(const MeasurementConfig& c) { return fnv1a(to_json(c).dump()); }

// ---------------------------------------------------------------------------
// Models.

inline Json model_to_json(const CovarianceModel& m) {
  Json j;
  j["d"] = m.dimension();
  j["matrix"] = to_json(m.matrix());
  j["eigenvalues"] = to_json(m.eigenvalues());
  j["eigenvectors"] = to_json(m.eigenvectors());
  j["mean_vector"] = m.mean_vector() ? to_json(*m.mean_vector()) : Json(nullptr);
  j["alpha"] = m.mean_norm_sq();
  j["total_variance"] = m.total_variance();
  j["centered"] = m.centered();
  j["model_hash"] = hex64(m.fingerprint());
  return j;
}

inline CovarianceModel model_from_json(const Json& j) {
  const auto d = field<Eigen::Index>(j, "d");
  detail::require(d >= 2, "model dimension must be at least 2");
  if (!j.contains("matrix") || !j.contains("eigenvalues") || !j.contains("eigenvectors")) {
    throw ValidationError("model file needs matrix, eigenvalues and eigenvectors");
  }
  CMatrix matrix = cmatrix_from_json(j["matrix"], d);
  RVector ev = rvector_from_json(j["eigenvalues"]);
  CMatrix evecs = cmatrix_from_json(j["eigenvectors"], d);
  std::optional<CVector> mean;
  if (j.contains("mean_vector") && !j["mean_vector"].is_null()) {
    mean = cvector_from_json(j["mean_vector"]);
    detail::require(mean->size() == d, "mean vector dimension mismatch");
  }
  CovarianceModel m = CovarianceModel::from_decomposition(std::move(matrix), std::move(ev), std::move(evecs),
                                                          std::move(mean));
  if (j.contains("model_hash") && parse_hex64(field<std::string>(j, "model_hash")) != m.fingerprint()) {
    throw ValidationError("model hash does not match the stored decomposition");
  }
  return m;
}

inline CovarianceModel load_model(const std::filesystem::path& path) {
  return model_from_json(parse_json(read_text(path), "model file " + path.string()));
}

// ---------------------------------------------------------------------------
// Filters.

inline Json filter_to_json(const SoftFilter& f) {
  return Json{{"temperature", f.temperature},
              {"mu", f.chemical_potential},
              {"occupations", to_json(f.occupations)},
              {"model_hash", hex64(f.model_hash)}};
}

/// Loads a filter and checks that it belongs to `model`'s eigenbasis.
inline SoftFilter filter_from_json(const Json& j, const CovarianceModel& model) {
  SoftFilter f;
  f.temperature = field<double>(j, "temperature");
  f.chemical_potential = field<double>(j, "mu");
  f.occupations = rvector_from_json(j.at("occupations"));
  f.model_hash = parse_hex64(field<std::string>(j, "model_hash"));
  if (f.model_hash != model.fingerprint()) throw ValidationError("filter belongs to a different model eigenbasis");
  if (f.occupations.size() != model.dimension()) throw ValidationError("filter dimension does not match the model");
  if (f.occupations.size() > 0 && (f.occupations.minCoeff() < 0.0 || f.occupations.maxCoeff() > 1.0)) {
    throw ValidationError("filter occupations must lie in [0, 1]");
  }
  return f;
}

// ---------------------------------------------------------------------------
// Run manifests.

/// Provenance of one CLI invocation; contains no timestamps so identical
/// invocations hash identically.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::uint64_t>> inputs;  ///< path, content hash
  std::vector<std::string> outputs;
  Json parameters = Json::object();
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  std::string version = FERMIPCA_VERSION;

  void add_input(const std::filesystem::path& path) {
    inputs.emplace_back(path.string(), content_hash(read_text(path)));
  }

  Json to_json() const {
    Json in = Json::array();
    for (const auto& [path, hash] : inputs) in.push_back(Json{{"path", path}, {"hash", hex64(hash)}});
    Json j;
    j["command"] = command;
    j["inputs"] = in;
    j["outputs"] = outputs;
    j["parameters"] = parameters;
    j["seed"] = seed ? Json(*seed) : Json(nullptr);
    j["samples"] = samples ? Json(*samples) : Json(nullptr);
    j["version"] = version;
    return j;
  }

  std::uint64_t hash() const { return fnv1a(to_json().dump()); }
};

/// Attaches the manifest and its hash to an output document.
inline void stamp(Json& doc, const RunManifest& manifest) {
  doc["manifest"] = manifest.to_json();
  doc["manifest_hash"] = hex64(manifest.hash());
}

// ---------------------------------------------------------------------------
// Thresholds.

inline Json to_json(const ThresholdSource& s) {
  if (s.type == ThresholdSource::Type::exact) return Json{{"type", "exact"}};
  return Json{{"type", "empirical"}, {"S", s.samples}, {"seed", s.seed}};
}

inline ThresholdSource source_from_json(const Json& j) {
  const auto type = field<std::string>(j, "type");
  if (type == "exact") return ThresholdSource::exact();
  if (type == "empirical") {
    return ThresholdSource::empirical(field<std::size_t>(j, "S"), field<std::uint64_t>(j, "seed"));
  }
  throw ValidationError("unknown threshold source '" + type + "'");
}

/// Thresholds as read back from a file, independent of kind.
struct ThresholdFile {
  std::string kind;  ///< "rank", "variance" or "fixed-variance"
  MeasurementConfig config;
  ThresholdSource source;
  std::uint64_t model_hash = 0;
  std::vector<std::pair<Json, double>> entries;  ///< key object ({"k":..} or {"theta":..}), beta
  Json extra = Json::object();

  std::optional<RankThresholds> rank() const {
    if (kind != "rank") return std::nullopt;
    RankThresholds r;
    r.config = config;
    r.source = source;
    for (const auto& [key, beta] : entries) r.thresholds[key.at("k").get<int>()] = beta;
    return r;
  }
};

inline Json thresholds_to_json(const RankThresholds& t, std::uint64_t model_hash) {
  Json entries = Json::array();
  for (const auto& [k, beta] : t.thresholds) entries.push_back(Json{{"k", k}, {"beta", beta}});
  return Json{{"kind", "rank"},
              {"config", to_json(t.config)},
              {"entries", entries},
              {"source", to_json(t.source)},
              {"model_hash", hex64(model_hash)},
              {"warnings", t.warnings}};
}

inline Json thresholds_to_json(const VarianceThresholds& t, std::uint64_t model_hash) {
  Json entries = Json::array();
  for (const auto& [theta, beta] : t.thresholds) entries.push_back(Json{{"theta", theta}, {"beta", beta}});
  return Json{{"kind", "variance"},
              {"config", to_json(t.config)},
              {"entries", entries},
              {"source", to_json(t.source)},
              {"model_hash", hex64(model_hash)},
              {"warnings", t.warnings}};
}

inline ThresholdFile thresholds_from_json(const Json& j) {
  ThresholdFile f;
  f.kind = field<std::string>(j, "kind");
  if (f.kind != "rank" && f.kind != "variance" && f.kind != "fixed-variance") {
    throw ValidationError("unknown threshold kind '" + f.kind + "'");
  }
  f.config = config_from_json(j.at("config"));
  f.source = source_from_json(j.at("source"));
  f.model_hash = parse_hex64(field<std::string>(j, "model_hash"));
  if (!j.contains("entries") || !j["entries"].is_array()) throw ValidationError("missing field 'entries'");
  for (const auto& e : j["entries"]) {
    Json key = e;
    key.erase("beta");
    f.entries.emplace_back(key, field<double>(e, "beta"));
  }
  for (const char* k : {"lambda_hat", "t_prime", "theta", "mode"}) {
    if (j.contains(k)) f.extra[k] = j[k];
  }
  return f;
}

inline ThresholdFile load_thresholds(const std::filesystem::path& path) {
  return thresholds_from_json(parse_json(read_text(path), "threshold file " + path.string()));
}

// ---------------------------------------------------------------------------
// Position samples: little-endian float64 stream plus a JSON sidecar.

inline std::string encode_samples(const std::vector<double>& samples) {
  std::string bytes(samples.size() * 8, '\0');
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(samples[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  return bytes;
}

inline std::vector<double> decode_samples(const std::string& bytes) {
  if (bytes.size() % 8 != 0) throw ValidationError("sample file length is not a multiple of 8 bytes");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

inline Json sample_sidecar(const PositionSampleSet& set) {
  return Json{{"seed", set.seed},
              {"count", set.samples.size()},
              {"probe", to_string(set.probe)},
              {"config", to_json(set.config)},
              {"format", "float64-le"}};
}

inline void save_samples(const std::filesystem::path& path, const PositionSampleSet& set, const RunManifest* manifest = nullptr) {
  write_text(path, encode_samples(set.samples));
  Json side = sample_sidecar(set);
  if (manifest) stamp(side, *manifest);
  write_text(path.string() + ".json", dump(side));
}

inline std::vector<double> load_samples(const std::filesystem::path& path) { return decode_samples(read_text(path)); }

inline std::string samples_to_csv(const std::vector<double>& samples) {
  std::string out = "q\n";
  for (double q : samples) out += Json(q).dump() + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Score reports.

inline Json to_json(const Score& s, const std::string& label) {
  return Json{{"label", label},
              {"s", s.s},
              {"s_bar", s.normalized ? Json(*s.normalized) : Json(nullptr)}};
}

inline Json to_json(const ScoreProfile& p) {
  return Json{{"pi", p.per_mode_probability ? to_json(*p.per_mode_probability) : Json(nullptr)},
              {"e", to_json(p.per_mode_energy)}};
}

}  // namespace fermipca::io
