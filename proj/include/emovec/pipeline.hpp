// emovec/pipeline.hpp

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

// End-to-end experiment: split, frame features, UBM, MAP supervectors, SVM
// grid selection, test-set scoring.

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "emovec/audio_io.hpp"
#include "emovec/config.hpp"
#include "emovec/eval.hpp"
#include "emovec/features.hpp"
#include "emovec/gmm.hpp"
#include "emovec/serialize.hpp"
#include "emovec/svm.hpp"

namespace emovec {

/// Frame features (T x D) for one utterance.
using FeatureProvider = std::function<Matrix(const UtteranceRecord&)>;

/// Decodes each record's WAV (relative paths resolve against base_dir) and
/// runs the frame-level feature pipeline.
inline FeatureProvider AudioFeatureProvider(std::filesystem::path base_dir,
                                            const FeatureConfig& cfg) {
  cfg.validate();
  auto fb = std::make_shared<const MelFilterbank>(FilterbankFor(cfg));
  return [base_dir = std::move(base_dir), cfg, fb](const UtteranceRecord& r) {
    std::filesystem::path p(r.audio_path);
    if (p.is_relative()) p = base_dir / p;
    return AssembleFeatures(ReadWavFile(p.string()), cfg, *fb).vectors;
  };
}

/// Records whose emotion has a class under the scheme, in input order.
inline std::vector<UtteranceRecord> FilterByScheme(const std::vector<UtteranceRecord>& records,
                                                   LabelScheme scheme) {
  std::vector<UtteranceRecord> out;
  for (const auto& r : records)
    if (MapLabel(r.emotion, scheme)) out.push_back(r);
  return out;
}

struct ExtractionFailure {
  std::string id;
  std::string error;
};

struct ExtractedSet {
  std::vector<std::optional<Matrix>> features;  // parallel to the records
  std::vector<ExtractionFailure> failures;
};

inline ExtractedSet ExtractAll(const std::vector<UtteranceRecord>& records,
                               const FeatureProvider& provider, int jobs) {
  ExtractedSet out;
  out.features.resize(records.size());
  std::vector<std::string> errors(records.size());
  ParallelFor(records.size(), jobs, [&](std::size_t i) {
    try {
      out.features[i] = provider(records[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < records.size(); ++i)
    if (!out.features[i]) out.failures.push_back({records[i].id, errors[i]});
  return out;
}

inline Matrix PoolFrames(const std::vector<const Matrix*>& parts) {
  std::size_t rows = 0, cols = 0;
  for (const Matrix* m : parts) {
    if (rows == 0 && m->rows() > 0) cols = m->cols();
    if (m->rows() > 0 && m->cols() != cols)
      throw Error(ErrorCode::kDimensionMismatch, "feature dimensions differ across utterances");
    rows += m->rows();
  }
  Matrix out(rows, cols);
  std::size_t at = 0;
  for (const Matrix* m : parts) {
    std::copy(m->data().begin(), m->data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(at));
    at += m->data().size();
  }
  return out;
}

/// MAP-adapted supervectors, one row per utterance.
inline Matrix Supervectors(const DiagGmm& ubm, const std::vector<const Matrix*>& feats,
                           const MapConfig& map, int jobs) {
  Matrix out(feats.size(), ubm.k() * ubm.d());
  ParallelFor(feats.size(), jobs, [&](std::size_t i) {
    const auto sv = ExtractSupervector(MapAdaptMeans(ubm, *feats[i], map));
    std::copy(sv.values.begin(), sv.values.end(), out.row(i).begin());
  });
  return out;
}

struct SvmTrainOutcome {
  OvoSvmModel model;
  std::optional<GridSelection> grid;
  OvoTrainSummary summary;
};

inline SvmTrainOutcome TrainSvmStage(const Matrix& x, const std::vector<std::string>& labels,
                                     const std::vector<std::string>& classes,
                                     const RunConfig& cfg) {
  SvmTrainOutcome out;
  TrainParams params = cfg.svm;
  if (cfg.grid_search) {
    out.grid = GridSelect(x, labels, classes, cfg.svm, cfg.folds, cfg.standardize, cfg.seed,
                          cfg.jobs);
    params = out.grid->best;
  }
  out.model = TrainOvo(x, labels, classes, params, cfg.standardize, cfg.jobs, &out.summary);
  return out;
}

/// Classes of the scheme that actually occur in `labels`, in scheme order.
inline std::vector<std::string> PresentClasses(LabelScheme scheme,
                                               const std::vector<std::string>& labels) {
  std::vector<std::string> out;
  for (const auto& c : SchemeClasses(scheme))
    if (std::find(labels.begin(), labels.end(), c) != labels.end()) out.push_back(c);
  return out;
}

struct ExperimentReport {
  std::string feature_digest;
  std::string run_digest;
  std::map<std::string, std::string> config;
  LabelScheme scheme = LabelScheme::kCategorical7;
  ConfusionMatrix confusion;
  Accuracy accuracy;
  Json train_summary;
  std::uint64_t seed = 0;
  double wall_clock_s = 0.0;
};

inline Json ReportToJson(const ExperimentReport& r, bool include_timing = true) {
  Json j;
  j["config"] = {{"feature_digest", r.feature_digest},
                 {"run_digest", r.run_digest},
                 {"settings", r.config}};
  j["scheme"] = SchemeName(r.scheme);
  j["classes"] = r.confusion.classes;
  j["confusion"] = r.confusion.counts;
  j["overall_pct"] = r.accuracy.overall_pct;
  Json per = Json::array();
  for (const auto& p : r.accuracy.per_class_pct) per.push_back(p ? Json(*p) : Json(nullptr));
  j["per_class_pct"] = per;
  j["train_summary"] = r.train_summary;
  j["seed"] = r.seed;
  if (include_timing) j["timing"] = {{"wall_clock_s", r.wall_clock_s}};
  return j;
}

inline std::string RenderReport(const ExperimentReport& r) {
  return "scheme: " + SchemeName(r.scheme) + "  (config " + r.run_digest + ")\n" +
         RenderConfusion(r.confusion, r.accuracy);
}

/// Runs the full pipeline. Records excluded by the scheme are dropped before
/// splitting; the UBM sees training-split frames only. Utterances that fail
/// to decode are skipped and listed, unless more than 10% fail.
inline ExperimentReport RunExperiment(const std::vector<UtteranceRecord>& all_records,
                                      const FeatureProvider& provider, RunConfig cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.sync_seeds();
  const auto records = FilterByScheme(all_records, cfg.scheme);
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "no records left under the scheme");

  auto extracted = ExtractAll(records, provider, cfg.jobs);
  if (extracted.failures.size() * 10 > records.size()) {
    std::string msg = std::to_string(extracted.failures.size()) + " of " +
                      std::to_string(records.size()) + " utterances failed:";
    for (const auto& f : extracted.failures) msg += "\n  " + f.id + ": " + f.error;
    throw Error(ErrorCode::kIoError, msg);
  }
  std::vector<UtteranceRecord> usable;
  std::vector<const Matrix*> usable_feats;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (extracted.features[i]) {
      usable.push_back(records[i]);
      usable_feats.push_back(&*extracted.features[i]);
    }

  const DatasetSplit split = SplitDataset(usable, cfg.split);
  std::vector<std::size_t> train_idx, test_idx;
  {
    std::size_t ti = 0;
    for (std::size_t i = 0; i < usable.size(); ++i) {
      if (ti < split.train.size() && split.train[ti] == usable[i].id) {
        train_idx.push_back(i);
        ++ti;
      } else {
        test_idx.push_back(i);
      }
    }
  }

  std::vector<const Matrix*> train_feats;
  for (std::size_t i : train_idx) train_feats.push_back(usable_feats[i]);
  const Matrix pooled = PoolFrames(train_feats);
  const UbmTrainResult ubm = TrainUbm(pooled, cfg.ubm, cfg.jobs);

  const Matrix sv = Supervectors(ubm.gmm, usable_feats, cfg.map, cfg.jobs);
  auto rows_of = [&](const std::vector<std::size_t>& idx) {
    Matrix m(idx.size(), sv.cols());
    for (std::size_t r = 0; r < idx.size(); ++r)
      std::copy(sv.row(idx[r]).begin(), sv.row(idx[r]).end(), m.row(r).begin());
    return m;
  };
  auto labels_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    for (std::size_t i : idx) out.push_back(*MapLabel(usable[i].emotion, cfg.scheme));
    return out;
  };
  const Matrix train_x = rows_of(train_idx), test_x = rows_of(test_idx);
  const auto train_y = labels_of(train_idx), test_y = labels_of(test_idx);
  const auto classes = PresentClasses(cfg.scheme, train_y);

  const SvmTrainOutcome svm = TrainSvmStage(train_x, train_y, classes, cfg);

  std::vector<std::string> preds(test_idx.size());
  ParallelFor(test_idx.size(), cfg.jobs,
              [&](std::size_t t) { preds[t] = Predict(svm.model, test_x.row(t)).label; });

  ExperimentReport report;
  report.feature_digest = cfg.features.digest();
  report.run_digest = cfg.digest();
  report.config = cfg.canonical_map();
  report.scheme = cfg.scheme;
  // Test classes absent from training still get a confusion row.
  report.confusion = Confusion(test_y, preds, PresentClasses(cfg.scheme, [&] {
                                 auto all = train_y;
                                 all.insert(all.end(), test_y.begin(), test_y.end());
                                 return all;
                               }()));
  report.accuracy = Accuracies(report.confusion);
  report.seed = cfg.seed;

  Json ts;
  ts["n_train"] = train_idx.size();
  ts["n_test"] = test_idx.size();
  ts["ubm_frames"] = pooled.rows();
  ts["ubm_em_iterations"] = ubm.summary.em_iterations;
  ts["ubm_converged"] = ubm.summary.converged;
  ts["ubm_final_log_likelihood"] = ubm.summary.final_log_likelihood;
  ts["svm_kernel"] = svm.model.machines.front().kernel.kind == KernelKind::kLinear ? "linear" : "rbf";
  ts["svm_sigma"] = svm.model.machines.front().kernel.sigma;
  ts["svm_c"] = svm.grid ? svm.grid->best.C : cfg.svm.C;
  if (svm.grid) {
    ts["cv_accuracy"] = svm.grid->best_accuracy;
    ts["sigma_scale"] = svm.grid->sigma_scale;
  }
  int nonconverged = 0;
  for (const auto& m : svm.summary.machines) nonconverged += m.converged ? 0 : 1;
  ts["nonconverged_machines"] = nonconverged;
  Json failures = Json::array();
  for (const auto& f : extracted.failures) failures.push_back({{"id", f.id}, {"error", f.error}});
  ts["failed_utterances"] = failures;
  report.train_summary = ts;
  report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace emovec
