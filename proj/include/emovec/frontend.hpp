// emovec/frontend.hpp

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

// Waveform to analysis frames: pre-emphasis, framing, energy-based silence
// removal and Hamming tapering.

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "emovec/audio_io.hpp"
#include "emovec/core.hpp"

namespace emovec {

inline constexpr double kDefaultPreemphasis = 0.95;
inline constexpr double kWindowMs = 16.0;
inline constexpr double kShiftMs = 8.0;

struct FrameMatrix {
  Matrix frames;  // T x W
  int frame_shift = 0;
  int sample_rate = kCorpusSampleRate;

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t width() const { return frames.cols(); }
};

struct VadConfig {
  double floor_db = 40.0;
};

inline std::vector<double> PreEmphasize(const PcmSignal& signal, double coeff) {
  const auto& x = signal.samples;
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  y[0] = x[0];
  for (std::size_t n = 1; n < x.size(); ++n) y[n] = x[n] - coeff * x[n - 1];
  return y;
}

inline int MsToSamples(double ms, int sample_rate) {
  return static_cast<int>(std::lround(ms * 1e-3 * sample_rate));
}

/// Slices samples into frames of round(window_ms) with hop round(shift_ms).
/// A trailing partial frame is dropped.
inline FrameMatrix FrameSignal(std::span<const double> samples, double window_ms,
                               double shift_ms, int sample_rate) {
  if (!(shift_ms > 0.0) || window_ms < shift_ms)
    throw Error(ErrorCode::kBadConfig, "frame_signal needs window_ms >= shift_ms > 0");
  const auto width = static_cast<std::size_t>(MsToSamples(window_ms, sample_rate));
  const auto shift = static_cast<std::size_t>(MsToSamples(shift_ms, sample_rate));
  FrameMatrix out;
  out.frame_shift = static_cast<int>(shift);
  out.sample_rate = sample_rate;
  const std::size_t n = samples.size();
  const std::size_t count = n >= width ? 1 + (n - width) / shift : 0;
  out.frames = Matrix(count, width);
  for (std::size_t t = 0; t < count; ++t)
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(t * shift), width,
                out.frames.row(t).begin());
  return out;
}

inline std::vector<double> HammingWindow(std::span<const double> frame) {
  const std::size_t w = frame.size();
  std::vector<double> out(w);
  if (w < 2) throw Error(ErrorCode::kBadConfig, "hamming window needs at least 2 samples");
  for (std::size_t n = 0; n < w; ++n)
    out[n] = frame[n] * (0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(n) /
                                                  static_cast<double>(w - 1)));
  return out;
}

inline double FrameEnergyDb(std::span<const double> frame) {
  double e = 0.0;
  for (double s : frame) e += s * s;
  return 10.0 * std::log10(std::max(e, 1e-10));
}

/// Keeps frames within cfg.floor_db of the loudest frame, in order. The
/// loudest frame always survives.
inline FrameMatrix RemoveSilence(const FrameMatrix& in, const VadConfig& cfg) {
  if (in.num_frames() == 0) throw Error(ErrorCode::kEmptyInput, "no frames for VAD");
  if (!(cfg.floor_db > 0.0)) throw Error(ErrorCode::kBadConfig, "vad floor_db must be > 0");
  std::vector<double> db(in.num_frames());
  std::size_t loudest = 0;
  for (std::size_t t = 0; t < db.size(); ++t) {
    db[t] = FrameEnergyDb(in.frames.row(t));
    if (db[t] > db[loudest]) loudest = t;
  }
  const double threshold = db[loudest] - cfg.floor_db;
  FrameMatrix out;
  out.frame_shift = in.frame_shift;
  out.sample_rate = in.sample_rate;
  out.frames = Matrix(0, in.width());
  for (std::size_t t = 0; t < db.size(); ++t)
    if (db[t] >= threshold) out.frames.append_row(in.frames.row(t));
  if (out.frames.rows() == 0) out.frames.append_row(in.frames.row(loudest));
  return out;
}

}  // namespace emovec
