// emovec/eval.hpp

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

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "emovec/audio_io.hpp"
#include "emovec/core.hpp"

namespace emovec {

enum class LabelScheme {
  kCategorical7,
  kArousalBinary,
  kValenceTernary,
  kNegVsPos,
  kEmotionalVsNeutral
};

inline std::string SchemeName(LabelScheme s) {
  switch (s) {
    case LabelScheme::kCategorical7: return "categorical";
    case LabelScheme::kArousalBinary: return "arousal";
    case LabelScheme::kValenceTernary: return "valence";
    case LabelScheme::kNegVsPos: return "negpos";
    case LabelScheme::kEmotionalVsNeutral: return "emoneutral";
  }
  return "?";
}

inline std::optional<LabelScheme> ParseScheme(std::string_view s) {
  for (auto scheme : {LabelScheme::kCategorical7, LabelScheme::kArousalBinary,
                      LabelScheme::kValenceTernary, LabelScheme::kNegVsPos,
                      LabelScheme::kEmotionalVsNeutral})
    if (s == SchemeName(scheme)) return scheme;
  return std::nullopt;
}

inline std::vector<std::string> SchemeClasses(LabelScheme s) {
  switch (s) {
    case LabelScheme::kCategorical7: {
      std::vector<std::string> out;
      for (EmotionLabel e : kAllEmotions) out.push_back(EmotionName(e));
      return out;
    }
    case LabelScheme::kArousalBinary: return {"high", "low"};
    case LabelScheme::kValenceTernary: return {"negative", "neutral", "positive"};
    case LabelScheme::kNegVsPos: return {"negative", "positive"};
    case LabelScheme::kEmotionalVsNeutral: return {"emotional", "neutral"};
  }
  return {};
}

/// Class of an emotion under a scheme; nullopt means the emotion is left out
/// of that experiment. Fear has no valence class; NegVsPos also drops Neutral.
inline std::optional<std::string> MapLabel(EmotionLabel e, LabelScheme scheme) {
  using E = EmotionLabel;
  const bool negative = e == E::kAnger || e == E::kDisgust || e == E::kSadness ||
                        e == E::kBoredom;
  switch (scheme) {
    case LabelScheme::kCategorical7:
      return EmotionName(e);
    case LabelScheme::kArousalBinary:
      if (e == E::kAnger || e == E::kFear || e == E::kHappiness || e == E::kDisgust)
        return "high";
      return "low";
    case LabelScheme::kValenceTernary:
      if (negative) return "negative";
      if (e == E::kNeutral) return "neutral";
      if (e == E::kHappiness) return "positive";
      return std::nullopt;
    case LabelScheme::kNegVsPos:
      if (negative) return "negative";
      if (e == E::kHappiness) return "positive";
      return std::nullopt;
    case LabelScheme::kEmotionalVsNeutral:
      if (e == E::kNeutral) return "neutral";
      if (e == E::kFear) return std::nullopt;
      return "emotional";
  }
  return std::nullopt;
}

struct SplitSpec {
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

namespace detail {

inline std::size_t TestCount(std::size_t n, double fraction) {
  auto count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 0.5));
  count = std::max<std::size_t>(count, 1);
  return std::min(count, n - 1);
}

}  // namespace detail

/// Seeded train/test partition. Stratified splits shuffle each emotion
/// separately and move round(count * fraction) of it (at least one, at most
/// count - 1) to the test side. Both lists keep manifest order.
inline DatasetSplit SplitDataset(const std::vector<UtteranceRecord>& records,
                                 const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw Error(ErrorCode::kBadConfig, "test_fraction must lie in (0, 1)");
  std::vector<bool> is_test(records.size(), false);
  Rng rng(spec.seed);
  auto pick = [&](std::vector<std::size_t> members) {
    rng.shuffle(members);
    const std::size_t count = detail::TestCount(members.size(), spec.test_fraction);
    for (std::size_t i = 0; i < count; ++i) is_test[members[i]] = true;
  };
  if (spec.stratified) {
    for (EmotionLabel e : kAllEmotions) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].emotion == e) members.push_back(i);
      if (members.empty()) continue;
      if (members.size() < 2)
        throw Error(ErrorCode::kClassTooSmall,
                    EmotionName(e) + " has a single utterance; stratified split needs 2");
      pick(std::move(members));
    }
  } else {
    if (records.size() < 2)
      throw Error(ErrorCode::kClassTooSmall, "split needs at least 2 utterances");
    std::vector<std::size_t> all(records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    pick(std::move(all));
  }
  DatasetSplit out;
  for (std::size_t i = 0; i < records.size(); ++i)
    (is_test[i] ? out.test : out.train).push_back(records[i].id);
  return out;
}

struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<long>> counts;  // rows = truth, columns = prediction

  long total() const {
    long s = 0;
    for (const auto& r : counts)
      for (long c : r) s += c;
    return s;
  }
  long row_sum(std::size_t i) const {
    long s = 0;
    for (long c : counts[i]) s += c;
    return s;
  }
};

inline ConfusionMatrix Confusion(const std::vector<std::string>& truths,
                                 const std::vector<std::string>& preds,
                                 const std::vector<std::string>& classes) {
  if (truths.size() != preds.size())
    throw Error(ErrorCode::kLengthMismatch, std::to_string(truths.size()) + " truths vs " +
                                                std::to_string(preds.size()) + " predictions");
  auto index = [&](const std::string& l) {
    const auto it = std::find(classes.begin(), classes.end(), l);
    if (it == classes.end()) throw Error(ErrorCode::kUnknownClass, "'" + l + "'");
    return static_cast<std::size_t>(it - classes.begin());
  };
  ConfusionMatrix cm{classes, std::vector<std::vector<long>>(
                                  classes.size(), std::vector<long>(classes.size(), 0))};
  for (std::size_t t = 0; t < truths.size(); ++t) ++cm.counts[index(truths[t])][index(preds[t])];
  return cm;
}

struct Accuracy {
  double overall_pct = 0.0;
  std::vector<std::optional<double>> per_class_pct;  // nullopt for classes with no samples
};

inline Accuracy Accuracies(const ConfusionMatrix& cm) {
  const long total = cm.total();
  if (total == 0) throw Error(ErrorCode::kEmptyMatrix, "confusion matrix has no samples");
  Accuracy acc;
  long trace = 0;
  for (std::size_t i = 0; i < cm.classes.size(); ++i) {
    trace += cm.counts[i][i];
    const long row = cm.row_sum(i);
    if (row == 0) acc.per_class_pct.push_back(std::nullopt);
    else acc.per_class_pct.push_back(100.0 * static_cast<double>(cm.counts[i][i]) / row);
  }
  acc.overall_pct = 100.0 * static_cast<double>(trace) / static_cast<double>(total);
  return acc;
}

/// Two decimals, half-up.
inline std::string FormatPct(double pct) {
  const double r = std::floor(pct * 100.0 + 0.5) / 100.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", r);
  return buf;
}

/// Aligned plain-text rendering: one row per true class plus a per-class
/// accuracy line.
inline std::string RenderConfusion(const ConfusionMatrix& cm, const Accuracy& acc) {
  std::size_t width = 10;
  for (const auto& c : cm.classes) width = std::max(width, c.size() + 2);
  auto cell = [&](const std::string& s) {
    return std::string(width > s.size() ? width - s.size() : 0, ' ') + s;
  };
  std::string out = cell("true\\pred");
  for (const auto& c : cm.classes) out += cell(c);
  out += "\n";
  for (std::size_t i = 0; i < cm.classes.size(); ++i) {
    out += cell(cm.classes[i]);
    for (long v : cm.counts[i]) out += cell(std::to_string(v));
    out += "\n";
  }
  out += cell("acc(%)");
  for (const auto& p : acc.per_class_pct) out += cell(p ? FormatPct(*p) : "-");
  out += "\n" + cell("overall") + cell(FormatPct(acc.overall_pct)) + "\n";
  return out;
}

}  // namespace emovec
