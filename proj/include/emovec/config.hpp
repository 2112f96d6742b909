// emovec/config.hpp

// Copyright 2026  emovec authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Flat `key = value` run configuration with dotted keys, e.g.
//
//   # comment
//   features.dataset = data5
//   ubm.k = 128
//
// Later assignments override earlier ones; the CLI applies flags after the
// config file.

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "emovec/core.hpp"
#include "emovec/eval.hpp"
#include "emovec/features.hpp"
#include "emovec/gmm.hpp"
#include "emovec/svm.hpp"

namespace emovec {

struct RunConfig {
  FeatureConfig features;
  UbmTrainConfig ubm;
  MapConfig map;
  TrainParams svm;
  bool standardize = true;
  bool grid_search = true;
  int folds = 5;
  SplitSpec split;
  LabelScheme scheme = LabelScheme::kCategorical7;
  std::uint64_t seed = 0;
  int jobs = 1;  // not part of the digest: results do not depend on it

  /// Propagates the global seed to every seeded stage.
  void sync_seeds() {
    ubm.seed = seed;
    split.seed = seed;
  }

  /// Every result-affecting setting as sorted key=value pairs.
  std::map<std::string, std::string> canonical_map() const;
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : canonical_map()) out += k + "=" + v + "\n";
    return out;
  }
  std::string digest() const { return Fnv1aHex(canonical()); }
};

namespace detail {

inline std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string Bool(bool b) { return b ? "true" : "false"; }

inline double ParseDouble(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kBadConfig, key + ": '" + v + "' is not a number");
}

inline long long ParseInt(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error(ErrorCode::kBadConfig, key + ": '" + v + "' is not an integer");
  return out;
}

inline bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::kBadConfig, key + ": '" + v + "' is not a boolean");
}

}  // namespace detail

inline std::map<std::string, std::string> RunConfig::canonical_map() const {
  using detail::Bool;
  using detail::Num;
  std::map<std::string, std::string> m;
  const auto [lo, hi] = features.edges();
  m["features.band"] = BandName(features.band);
  m["features.f_low"] = Num(lo);
  m["features.f_high"] = Num(hi);
  m["features.num_filters"] = std::to_string(features.filters());
  m["features.num_ceps"] = std::to_string(features.ceps());
  m["features.nfft"] = std::to_string(features.fft_size());
  m["features.dataset"] = DatasetName(features.dataset);
  m["features.delta_window"] = std::to_string(features.delta_window);
  m["features.preemph"] = Num(features.preemph);
  m["features.vad_floor_db"] = Num(features.vad.floor_db);
  m["ubm.k"] = std::to_string(ubm.k);
  m["ubm.max_em_iters"] = std::to_string(ubm.max_em_iters);
  m["ubm.rel_ll_tol"] = Num(ubm.rel_ll_tol);
  m["ubm.kmeans_iters"] = std::to_string(ubm.kmeans_iters);
  m["ubm.var_floor_scale"] = Num(ubm.var_floor_scale);
  m["map.relevance_factor"] = Num(map.relevance_factor);
  m["svm.c"] = Num(svm.C);
  m["svm.tol"] = Num(svm.tol);
  m["svm.max_passes"] = std::to_string(svm.max_passes);
  m["svm.kernel"] = svm.kernel.kind == KernelKind::kLinear ? "linear" : "rbf";
  m["svm.sigma"] = Num(svm.kernel.sigma);
  m["svm.standardize"] = Bool(standardize);
  m["svm.grid_search"] = Bool(grid_search);
  m["svm.folds"] = std::to_string(folds);
  std::string cs;
  for (double c : svm.grid.c_values) cs += (cs.empty() ? "" : ",") + Num(c);
  m["svm.grid.c"] = cs;
  m["svm.grid.linear"] = Bool(svm.grid.linear);
  m["svm.grid.rbf"] = Bool(svm.grid.rbf);
  m["svm.grid.sigma_exp_min"] = std::to_string(svm.grid.sigma_exp_min);
  m["svm.grid.sigma_exp_max"] = std::to_string(svm.grid.sigma_exp_max);
  m["split.test_fraction"] = Num(split.test_fraction);
  m["split.stratified"] = Bool(split.stratified);
  m["eval.scheme"] = SchemeName(scheme);
  m["seed"] = std::to_string(seed);
  return m;
}

/// Applies one assignment; unknown keys and malformed values raise BadConfig.
inline void SetConfigValue(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::ParseBool;
  using detail::ParseDouble;
  using detail::ParseInt;
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::kBadConfig, key + ": " + why);
  };
  auto& f = cfg.features;
  if (key == "features.band") {
    const auto b = ParseBand(value);
    if (!b) throw bad("expected narrow|low|combined");
    f.band = *b;
  } else if (key == "features.f_low" || key == "features.f_high") {
    auto edges = f.edges();
    (key == "features.f_low" ? edges.first : edges.second) = ParseDouble(key, value);
    f.band_hz = edges;
  } else if (key == "features.num_filters") {
    f.num_filters = static_cast<int>(ParseInt(key, value));
  } else if (key == "features.num_ceps") {
    f.num_ceps = static_cast<int>(ParseInt(key, value));
  } else if (key == "features.nfft") {
    f.nfft = static_cast<int>(ParseInt(key, value));
  } else if (key == "features.dataset") {
    const auto d = ParseDataset(value);
    if (!d) throw bad("expected data1..data5");
    f.dataset = *d;
  } else if (key == "features.delta_window") {
    f.delta_window = static_cast<int>(ParseInt(key, value));
  } else if (key == "features.preemph") {
    f.preemph = ParseDouble(key, value);
  } else if (key == "features.vad_floor_db") {
    f.vad.floor_db = ParseDouble(key, value);
  } else if (key == "ubm.k") {
    cfg.ubm.k = static_cast<int>(ParseInt(key, value));
  } else if (key == "ubm.max_em_iters") {
    cfg.ubm.max_em_iters = static_cast<int>(ParseInt(key, value));
  } else if (key == "ubm.rel_ll_tol") {
    cfg.ubm.rel_ll_tol = ParseDouble(key, value);
  } else if (key == "ubm.kmeans_iters") {
    cfg.ubm.kmeans_iters = static_cast<int>(ParseInt(key, value));
  } else if (key == "ubm.var_floor_scale") {
    cfg.ubm.var_floor_scale = ParseDouble(key, value);
  } else if (key == "map.relevance_factor") {
    cfg.map.relevance_factor = ParseDouble(key, value);
  } else if (key == "svm.c") {
    cfg.svm.C = ParseDouble(key, value);
  } else if (key == "svm.tol") {
    cfg.svm.tol = ParseDouble(key, value);
  } else if (key == "svm.max_passes") {
    cfg.svm.max_passes = static_cast<int>(ParseInt(key, value));
  } else if (key == "svm.kernel") {
    if (value == "linear") cfg.svm.kernel.kind = KernelKind::kLinear;
    else if (value == "rbf") cfg.svm.kernel.kind = KernelKind::kRbf;
    else throw bad("expected linear|rbf");
  } else if (key == "svm.sigma") {
    cfg.svm.kernel.sigma = ParseDouble(key, value);
  } else if (key == "svm.standardize") {
    cfg.standardize = ParseBool(key, value);
  } else if (key == "svm.grid_search") {
    cfg.grid_search = ParseBool(key, value);
  } else if (key == "svm.folds") {
    cfg.folds = static_cast<int>(ParseInt(key, value));
  } else if (key == "svm.grid.c") {
    std::vector<double> cs;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) cs.push_back(ParseDouble(key, detail::Trim(item)));
    if (cs.empty()) throw bad("empty list");
    cfg.svm.grid.c_values = cs;
  } else if (key == "svm.grid.linear") {
    cfg.svm.grid.linear = ParseBool(key, value);
  } else if (key == "svm.grid.rbf") {
    cfg.svm.grid.rbf = ParseBool(key, value);
  } else if (key == "svm.grid.sigma_exp_min") {
    cfg.svm.grid.sigma_exp_min = static_cast<int>(ParseInt(key, value));
  } else if (key == "svm.grid.sigma_exp_max") {
    cfg.svm.grid.sigma_exp_max = static_cast<int>(ParseInt(key, value));
  } else if (key == "split.test_fraction") {
    cfg.split.test_fraction = ParseDouble(key, value);
  } else if (key == "split.stratified") {
    cfg.split.stratified = ParseBool(key, value);
  } else if (key == "eval.scheme") {
    const auto s = ParseScheme(value);
    if (!s) throw bad("expected categorical|arousal|valence|negpos|emoneutral");
    cfg.scheme = *s;
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(ParseInt(key, value));
  } else if (key == "jobs") {
    cfg.jobs = static_cast<int>(ParseInt(key, value));
  } else {
    throw Error(ErrorCode::kBadConfig, "unknown key '" + key + "'");
  }
  cfg.sync_seeds();
}

inline void ApplyConfigText(RunConfig& cfg, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = detail::Trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kBadConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    SetConfigValue(cfg, detail::Trim(std::string_view(trimmed).substr(0, eq)),
                   detail::Trim(std::string_view(trimmed).substr(eq + 1)));
  }
}

inline std::string RenderConfigText(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg.canonical_map()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace emovec
