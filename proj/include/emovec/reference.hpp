// emovec/reference.hpp

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

// Published EMO-DB reference results reproduced by `emovec reproduce`.
// Keep in sync with docs/reference_numbers.md (table version 1).

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "emovec/eval.hpp"
#include "emovec/features.hpp"

namespace emovec {

inline constexpr int kReferenceTableVersion = 1;

struct ReferenceRow {
  std::string id;
  std::string source;  // table and row the numbers come from
  Band band = Band::kCombined;
  Dataset dataset = Dataset::kData1;
  LabelScheme scheme = LabelScheme::kCategorical7;
  std::optional<double> overall_pct;
  std::vector<std::pair<std::string, double>> per_class_pct;
};

inline const std::vector<ReferenceRow>& ReferenceRows() {
  using B = Band;
  using D = Dataset;
  using S = LabelScheme;
  static const std::vector<ReferenceRow> rows = {
      {"table2-narrow", "Table 2, MFCC 300-3400 Hz", B::kNarrow, D::kData1, S::kCategorical7, 72.85, {}},
      {"table2-low", "Table 2, Low-MFCC 0-300 Hz", B::kLow, D::kData1, S::kCategorical7, 62.0, {}},
      {"table2-combined", "Table 2, Combined MFCC 0-3400 Hz", B::kCombined, D::kData1, S::kCategorical7, 81.35, {}},
      {"data1", "Table 4, Data1", B::kCombined, D::kData1, S::kCategorical7, 81.35, {}},
      {"data2", "Table 4, Data2", B::kCombined, D::kData2, S::kCategorical7, 82.12, {}},
      {"data3", "Table 4, Data3", B::kCombined, D::kData3, S::kCategorical7, 79.92, {}},
      {"data4", "Table 4, Data4", B::kCombined, D::kData4, S::kCategorical7, 79.50, {}},
      {"data5", "Table 4, Data5", B::kCombined, D::kData5, S::kCategorical7, 83.36, {}},
      {"arousal", "Table 6, arousal high/low", B::kCombined, D::kData5, S::kArousalBinary,
       std::nullopt, {{"high", 97.85}, {"low", 98.24}}},
      {"valence", "Table 7, valence", B::kCombined, D::kData5, S::kValenceTernary, std::nullopt,
       {{"negative", 100.0}, {"neutral", 21.42}, {"positive", 57.14}}},
      {"negpos", "Table 8, negative vs positive", B::kCombined, D::kData5, S::kNegVsPos,
       std::nullopt, {{"negative", 100.0}, {"positive", 38.09}}},
      {"emoneutral", "Table 9, emotional vs neutral", B::kCombined, D::kData5,
       S::kEmotionalVsNeutral, std::nullopt, {{"emotional", 93.91}, {"neutral", 0.0}}},
  };
  return rows;
}

inline const ReferenceRow* FindReferenceRow(std::string_view id) {
  for (const auto& r : ReferenceRows())
    if (r.id == id) return &r;
  return nullptr;
}

}  // namespace emovec
