// emovec/cli.hpp

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

// `emovec extract|train-ubm|train-svm|evaluate|reproduce`.
//
// Exit codes: 0 success, 1 data or model error, 2 usage error.
// Settings precedence (lowest first): built-in defaults, --config file,
// --set key=value, dedicated flags (--seed, --jobs, --scheme).

#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "emovec/audio_io.hpp"
#include "emovec/config.hpp"
#include "emovec/pipeline.hpp"
#include "emovec/reference.hpp"
#include "emovec/serialize.hpp"

namespace emovec::cli {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> scheme;
  std::string out;
  bool force = false;
  std::string manifest;
  std::string index;
  std::string ubm;
  std::string svm;
  std::string subset;
  std::string row;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline RunConfig ResolveConfig(const CommonOptions& o) {
  RunConfig cfg;
  try {
    if (!o.config_path.empty()) {
      std::ifstream in(o.config_path);
      if (!in) throw UsageError("cannot read config " + o.config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      ApplyConfigText(cfg, ss.str());
    }
    for (const auto& s : o.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
      SetConfigValue(cfg, detail::Trim(std::string_view(s).substr(0, eq)),
                     detail::Trim(std::string_view(s).substr(eq + 1)));
    }
    if (o.seed) SetConfigValue(cfg, "seed", std::to_string(*o.seed));
    if (o.jobs) SetConfigValue(cfg, "jobs", std::to_string(*o.jobs));
    if (o.scheme) SetConfigValue(cfg, "eval.scheme", *o.scheme);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (cfg.jobs < 1) throw UsageError("--jobs must be >= 1");
  cfg.sync_seeds();
  return cfg;
}

// ---- feature index ------------------------------------------------------

struct IndexEntry {
  UtteranceRecord record;
  std::string cache;  // path relative to the index directory
};

struct FeatureIndex {
  std::string feature_digest;
  std::string feature_canonical;
  std::vector<IndexEntry> entries;
  fs::path dir;

  Matrix load(const IndexEntry& e) const {
    return DecodeFeatureCache(ReadFileBytes((dir / e.cache).string()));
  }
  std::vector<UtteranceRecord> records() const {
    std::vector<UtteranceRecord> out;
    for (const auto& e : entries) out.push_back(e.record);
    return out;
  }
};

inline Json IndexToJson(const FeatureIndex& idx) {
  Json j;
  j["format"] = "emovec-index";
  j["version"] = 1;
  j["feature_config"] = idx.feature_digest;
  j["feature_canonical"] = idx.feature_canonical;
  Json entries = Json::array();
  for (const auto& e : idx.entries) {
    Json ej{{"id", e.record.id},
            {"audio", e.record.audio_path},
            {"emotion", std::string(1, EmotionCode(e.record.emotion))},
            {"cache", e.cache}};
    if (e.record.speaker) ej["speaker"] = *e.record.speaker;
    entries.push_back(std::move(ej));
  }
  j["entries"] = std::move(entries);
  return j;
}

inline FeatureIndex LoadIndex(const std::string& path) {
  const Json j = ReadJsonFile(path);
  detail::ExpectFormat(j, "emovec-index");
  FeatureIndex idx;
  idx.dir = fs::path(path).parent_path();
  try {
    idx.feature_digest = j.at("feature_config").get<std::string>();
    idx.feature_canonical = j.value("feature_canonical", "");
    for (const auto& ej : j.at("entries")) {
      IndexEntry e;
      e.record.id = ej.at("id").get<std::string>();
      e.record.audio_path = ej.value("audio", "");
      const auto label = ParseEmotion(ej.at("emotion").get<std::string>());
      if (!label) throw Error(ErrorCode::kUnknownLabel, "index entry " + e.record.id);
      e.record.emotion = *label;
      if (ej.contains("speaker")) e.record.speaker = ej["speaker"].get<std::string>();
      e.cache = ej.at("cache").get<std::string>();
      idx.entries.push_back(std::move(e));
    }
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::kIoError, path + ": malformed index: " + ex.what());
  }
  return idx;
}

inline std::string CacheFileName(const std::string& id) {
  std::string name;
  for (char c : id) name += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return name + "-" + Fnv1aHex(id).substr(0, 8) + ".emfv";
}

inline std::vector<UtteranceRecord> LoadManifestFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open manifest " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return LoadManifest(ss.str());
}

/// Records of `subset` (train, test or all) after the scheme filter.
inline std::vector<std::size_t> SelectSubset(const std::vector<UtteranceRecord>& records,
                                             const RunConfig& cfg, const std::string& subset) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (MapLabel(records[i].emotion, cfg.scheme)) kept.push_back(i);
  if (subset == "all") return kept;
  if (subset != "train" && subset != "test")
    throw UsageError("--subset must be train, test or all");
  std::vector<UtteranceRecord> filtered;
  for (std::size_t i : kept) filtered.push_back(records[i]);
  const auto split = SplitDataset(filtered, cfg.split);
  const auto& ids = subset == "train" ? split.train : split.test;
  std::vector<std::size_t> out;
  std::size_t at = 0;
  for (std::size_t i : kept)
    if (at < ids.size() && records[i].id == ids[at]) {
      out.push_back(i);
      ++at;
    }
  return out;
}

// ---- commands -----------------------------------------------------------

inline int CmdExtract(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = ResolveConfig(o);
  if (o.manifest.empty()) throw UsageError("extract needs --manifest");
  const auto records = LoadManifestFile(o.manifest);
  std::string dir = o.out;
  if (dir.empty()) {
    const char* env = std::getenv("EMOVEC_CACHE_DIR");
    dir = env && *env ? env : "emovec_cache";
  }
  fs::create_directories(dir);
  const auto provider =
      AudioFeatureProvider(fs::path(o.manifest).parent_path(), cfg.features);
  FeatureIndex idx;
  idx.feature_digest = cfg.features.digest();
  idx.feature_canonical = cfg.features.canonical();
  std::vector<std::string> errors(records.size());
  std::vector<std::string> caches(records.size());
  ParallelFor(records.size(), cfg.jobs, [&](std::size_t i) {
    try {
      const Matrix feats = provider(records[i]);
      caches[i] = CacheFileName(records[i].id);
      WriteBytes((fs::path(dir) / caches[i]).string(), EncodeFeatureCache(feats));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  int failed = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!errors[i].empty()) {
      err << "error: " << records[i].id << ": " << errors[i] << "\n";
      ++failed;
      continue;
    }
    idx.entries.push_back({records[i], caches[i]});
  }
  const std::string index_path = (fs::path(dir) / "index.json").string();
  WriteJsonFile(index_path, IndexToJson(idx));
  out << "extracted " << idx.entries.size() << " of " << records.size()
      << " utterances (features " << idx.feature_digest << ", dim " << cfg.features.dim()
      << ") -> " << index_path << "\n";
  return failed > 0 ? 1 : 0;
}

inline int CmdTrainUbm(const CommonOptions& o, std::ostream& out, std::ostream&) {
  const RunConfig cfg = ResolveConfig(o);
  if (o.index.empty()) throw UsageError("train-ubm needs --index");
  const FeatureIndex idx = LoadIndex(o.index);
  const auto records = idx.records();
  const auto chosen = SelectSubset(records, cfg, o.subset.empty() ? "train" : o.subset);
  std::vector<Matrix> feats(chosen.size());
  ParallelFor(chosen.size(), cfg.jobs,
              [&](std::size_t i) { feats[i] = idx.load(idx.entries[chosen[i]]); });
  std::vector<const Matrix*> ptrs;
  for (const auto& f : feats) ptrs.push_back(&f);
  const Matrix pooled = PoolFrames(ptrs);
  const auto result = TrainUbm(pooled, cfg.ubm, cfg.jobs);
  const std::string path = o.out.empty() ? "ubm.json" : o.out;
  WriteJsonFile(path, GmmToJson(result.gmm, idx.feature_digest));
  char ll[64];
  std::snprintf(ll, sizeof(ll), "%.10g", result.summary.final_log_likelihood);
  out << "ubm: k=" << result.gmm.k() << " d=" << result.gmm.d() << " frames=" << pooled.rows()
      << " em_iterations=" << result.summary.em_iterations
      << " converged=" << (result.summary.converged ? "yes" : "no")
      << " final_log_likelihood=" << ll << " -> " << path << "\n";
  return 0;
}

inline void CheckDigest(const std::string& what, const std::string& expected,
                        const std::string& got, bool force, std::ostream& err) {
  if (expected == got) return;
  const std::string msg = what + " was built for features " + got + " but data has " + expected;
  if (!force) throw Error(ErrorCode::kDigestMismatch, msg + " (use --force to override)");
  err << "warning: " << msg << "\n";
}

inline Matrix SupervectorsFor(const FeatureIndex& idx, const std::vector<std::size_t>& chosen,
                              const DiagGmm& ubm, const RunConfig& cfg) {
  std::vector<Matrix> feats(chosen.size());
  ParallelFor(chosen.size(), cfg.jobs,
              [&](std::size_t i) { feats[i] = idx.load(idx.entries[chosen[i]]); });
  std::vector<const Matrix*> ptrs;
  for (const auto& f : feats) {
    if (f.cols() != ubm.d())
      throw Error(ErrorCode::kDimensionMismatch, "features of dim " + std::to_string(f.cols()) +
                                                     " vs UBM dim " + std::to_string(ubm.d()));
    ptrs.push_back(&f);
  }
  return Supervectors(ubm, ptrs, cfg.map, cfg.jobs);
}

inline int CmdTrainSvm(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = ResolveConfig(o);
  if (o.index.empty() || o.ubm.empty()) throw UsageError("train-svm needs --index and --ubm");
  const FeatureIndex idx = LoadIndex(o.index);
  std::string ubm_digest;
  const DiagGmm ubm = GmmFromJson(ReadJsonFile(o.ubm), &ubm_digest);
  CheckDigest("UBM", idx.feature_digest, ubm_digest, o.force, err);
  const auto records = idx.records();
  const auto chosen = SelectSubset(records, cfg, o.subset.empty() ? "train" : o.subset);
  const Matrix x = SupervectorsFor(idx, chosen, ubm, cfg);
  std::vector<std::string> labels;
  for (std::size_t i : chosen) labels.push_back(*MapLabel(records[i].emotion, cfg.scheme));
  const auto classes = PresentClasses(cfg.scheme, labels);
  const auto trained = TrainSvmStage(x, labels, classes, cfg);
  if (trained.grid) {
    for (const auto& s : trained.grid->scores) {
      char line[160];
      std::snprintf(line, sizeof(line), "grid: kernel=%s sigma=%.6g C=%.6g cv_acc=%.4f\n",
                    s.kernel.kind == KernelKind::kLinear ? "linear" : "rbf", s.kernel.sigma,
                    s.C, s.accuracy);
      out << line;
    }
  }
  const std::string path = o.out.empty() ? "svm.json" : o.out;
  WriteJsonFile(path, SvmToJson(trained.model, idx.feature_digest, cfg.digest()));
  const auto& k = trained.model.machines.front().kernel;
  out << "svm: classes=" << classes.size() << " machines=" << trained.model.machines.size()
      << " kernel=" << (k.kind == KernelKind::kLinear ? "linear" : "rbf") << " -> " << path
      << "\n";
  return 0;
}

inline int CmdEvaluate(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig cfg = ResolveConfig(o);
  if (o.ubm.empty() || o.svm.empty()) throw UsageError("evaluate needs --ubm and --svm");
  if (o.index.empty() == o.manifest.empty())
    throw UsageError("evaluate needs exactly one of --index or --manifest");
  std::string ubm_digest, svm_digest;
  const DiagGmm ubm = GmmFromJson(ReadJsonFile(o.ubm), &ubm_digest);
  const OvoSvmModel model = SvmFromJson(ReadJsonFile(o.svm), &svm_digest);
  CheckDigest("SVM model", ubm_digest, svm_digest, o.force, err);

  std::vector<UtteranceRecord> records;
  std::vector<std::optional<Matrix>> feats;
  std::string data_digest;
  std::vector<std::size_t> chosen;
  const std::string subset = o.subset.empty() ? "test" : o.subset;
  if (!o.index.empty()) {
    const FeatureIndex idx = LoadIndex(o.index);
    data_digest = idx.feature_digest;
    records = idx.records();
    chosen = SelectSubset(records, cfg, subset);
    feats.resize(records.size());
    for (std::size_t i : chosen) feats[i] = idx.load(idx.entries[i]);
  } else {
    records = LoadManifestFile(o.manifest);
    data_digest = cfg.features.digest();
    chosen = SelectSubset(records, cfg, subset);
    std::vector<UtteranceRecord> sub;
    for (std::size_t i : chosen) sub.push_back(records[i]);
    const auto ex = ExtractAll(
        sub, AudioFeatureProvider(fs::path(o.manifest).parent_path(), cfg.features), cfg.jobs);
    for (const auto& f : ex.failures) err << "error: " << f.id << ": " << f.error << "\n";
    if (ex.failures.size() * 10 > sub.size())
      throw Error(ErrorCode::kIoError, "more than 10% of utterances failed to decode");
    feats.resize(records.size());
    for (std::size_t k = 0; k < chosen.size(); ++k) feats[chosen[k]] = ex.features[k];
  }
  CheckDigest("UBM", data_digest, ubm_digest, o.force, err);

  const auto scheme_classes = SchemeClasses(cfg.scheme);
  for (const auto& c : model.classes)
    if (std::find(scheme_classes.begin(), scheme_classes.end(), c) == scheme_classes.end())
      throw Error(ErrorCode::kUnknownClass, "model class '" + c + "' is not part of scheme " +
                                                SchemeName(cfg.scheme));

  std::vector<std::size_t> usable;
  for (std::size_t i : chosen)
    if (feats[i]) usable.push_back(i);
  std::vector<std::string> truths(usable.size()), preds(usable.size());
  ParallelFor(usable.size(), cfg.jobs, [&](std::size_t t) {
    const Matrix& f = *feats[usable[t]];
    if (f.cols() != ubm.d())
      throw Error(ErrorCode::kDimensionMismatch, "features of dim " + std::to_string(f.cols()) +
                                                     " vs UBM dim " + std::to_string(ubm.d()));
    const auto sv = ExtractSupervector(MapAdaptMeans(ubm, f, cfg.map));
    preds[t] = Predict(model, sv.values).label;
    truths[t] = *MapLabel(records[usable[t]].emotion, cfg.scheme);
  });
  std::vector<std::string> all = truths;
  all.insert(all.end(), model.classes.begin(), model.classes.end());

  ExperimentReport report;
  report.feature_digest = data_digest;
  report.run_digest = cfg.digest();
  report.config = cfg.canonical_map();
  report.scheme = cfg.scheme;
  report.confusion = Confusion(truths, preds, PresentClasses(cfg.scheme, all));
  report.accuracy = Accuracies(report.confusion);
  report.seed = cfg.seed;
  report.train_summary = {{"n_test", usable.size()}, {"subset", subset}};
  report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string path = o.out.empty() ? "report.json" : o.out;
  WriteJsonFile(path, ReportToJson(report));
  out << RenderReport(report);
  return 0;
}

inline int CmdReproduce(const CommonOptions& o, std::ostream& out, std::ostream&) {
  const ReferenceRow* row = FindReferenceRow(o.row);
  if (!row) throw UsageError("unknown row '" + o.row + "'");
  if (o.manifest.empty()) throw UsageError("reproduce needs --manifest");
  RunConfig cfg = ResolveConfig(o);
  cfg.features.band = row->band;
  cfg.features.dataset = row->dataset;
  cfg.scheme = row->scheme;

  out << "== " << row->id << " (" << row->source << ", reference table v"
      << kReferenceTableVersion << ")\n";
  if (row->overall_pct) out << "reference overall: " << FormatPct(*row->overall_pct) << "%\n";
  for (const auto& [cls, pct] : row->per_class_pct)
    out << "reference " << cls << ": " << FormatPct(pct) << "%\n";
  out.flush();

  const auto records = LoadManifestFile(o.manifest);
  const auto report = RunExperiment(
      records, AudioFeatureProvider(fs::path(o.manifest).parent_path(), cfg.features), cfg);
  out << RenderReport(report);
  if (row->overall_pct)
    out << "overall: obtained " << FormatPct(report.accuracy.overall_pct) << "% vs reference "
        << FormatPct(*row->overall_pct) << "%\n";
  for (const auto& [cls, pct] : row->per_class_pct) {
    const auto& classes = report.confusion.classes;
    const auto it = std::find(classes.begin(), classes.end(), cls);
    std::string got = "-";
    if (it != classes.end()) {
      const auto& p = report.accuracy.per_class_pct[static_cast<std::size_t>(it - classes.begin())];
      if (p) got = FormatPct(*p);
    }
    out << cls << ": obtained " << got << "% vs reference " << FormatPct(pct) << "%\n";
  }
  if (!o.out.empty()) {
    Json j = ReportToJson(report);
    j["reference"] = {{"row", row->id}, {"source", row->source}};
    WriteJsonFile(o.out, j);
  }
  return 0;
}

// ---- entry point ----------------------------------------------------------

inline int Run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"emovec: frame-level features, GMM supervectors and SVMs for speech emotion"};
  app.require_subcommand(1);
  CommonOptions o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "override one setting, key=value (repeatable)");
    sub->add_option("--seed", o.seed, "global seed");
    sub->add_option("--jobs", o.jobs, "worker threads");
    sub->add_option("--scheme", o.scheme, "label scheme")
        ->check(CLI::IsMember({"categorical", "arousal", "valence", "negpos", "emoneutral"}));
    sub->add_option("--out", o.out, "output path");
    sub->add_flag("--force", o.force, "accept mismatched config digests");
  };
  auto* extract = app.add_subcommand("extract", "compute feature caches and an index");
  common(extract);
  extract->add_option("--manifest", o.manifest, "CSV manifest")->required();
  auto* ubm = app.add_subcommand("train-ubm", "train the universal background model");
  common(ubm);
  ubm->add_option("--index", o.index, "feature index from extract")->required();
  ubm->add_option("--subset", o.subset, "train|test|all (default train)");
  auto* svm = app.add_subcommand("train-svm", "train one-vs-one SVMs on supervectors");
  common(svm);
  svm->add_option("--index", o.index, "feature index from extract")->required();
  svm->add_option("--ubm", o.ubm, "UBM model file")->required();
  svm->add_option("--subset", o.subset, "train|test|all (default train)");
  auto* eval = app.add_subcommand("evaluate", "score a test set and write a report");
  common(eval);
  eval->add_option("--index", o.index, "feature index from extract");
  eval->add_option("--manifest", o.manifest, "CSV manifest (features computed on the fly)");
  eval->add_option("--ubm", o.ubm, "UBM model file")->required();
  eval->add_option("--svm", o.svm, "SVM model file")->required();
  eval->add_option("--subset", o.subset, "train|test|all (default test)");
  auto* repro = app.add_subcommand("reproduce", "rerun a published table row");
  common(repro);
  repro->add_option("row", o.row, "table row id")->required();
  repro->add_option("--manifest", o.manifest, "CSV manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (extract->parsed()) return CmdExtract(o, out, err);
    if (ubm->parsed()) return CmdTrainUbm(o, out, err);
    if (svm->parsed()) return CmdTrainSvm(o, out, err);
    if (eval->parsed()) return CmdEvaluate(o, out, err);
    if (repro->parsed()) return CmdReproduce(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kBadConfig ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace emovec::cli
