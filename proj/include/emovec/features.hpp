// emovec/features.hpp

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

#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emovec/audio_io.hpp"
#include "emovec/core.hpp"
#include "emovec/frontend.hpp"

namespace emovec {

inline constexpr double kLogFloor = 1e-10;

enum class Band { kNarrow, kLow, kCombined };
enum class Dataset { kData1 = 1, kData2, kData3, kData4, kData5 };

inline std::string BandName(Band b) {
  switch (b) {
    case Band::kNarrow: return "narrow";
    case Band::kLow: return "low";
    case Band::kCombined: return "combined";
  }
  return "?";
}

inline std::optional<Band> ParseBand(std::string_view s) {
  if (s == "narrow") return Band::kNarrow;
  if (s == "low") return Band::kLow;
  if (s == "combined") return Band::kCombined;
  return std::nullopt;
}

inline std::string DatasetName(Dataset d) {
  return "data" + std::to_string(static_cast<int>(d));
}

inline std::optional<Dataset> ParseDataset(std::string_view s) {
  if (s.size() == 5 && s.substr(0, 4) == "data" && s[4] >= '1' && s[4] <= '5')
    return static_cast<Dataset>(s[4] - '0');
  return std::nullopt;
}

/// Nominal band edges in Hz: narrow 300-3400, low 0-300, combined 0-3400.
inline std::pair<double, double> BandEdges(Band b) {
  switch (b) {
    case Band::kNarrow: return {300.0, 3400.0};
    case Band::kLow: return {0.0, 300.0};
    case Band::kCombined: return {0.0, 3400.0};
  }
  return {0.0, 0.0};
}

/// Zero-valued num_filters / nfft mean "pick the band default": 24 filters and
/// a 256-point FFT for the speech bands, 8 filters and a 1024-point FFT for
/// the low band (eight triangles do not fit into the five bins a 256-point
/// FFT has below 300 Hz).
struct FeatureConfig {
  Band band = Band::kCombined;
  std::optional<std::pair<double, double>> band_hz;  // overrides BandEdges
  int num_filters = 0;
  int num_ceps = 12;
  int nfft = 0;
  Dataset dataset = Dataset::kData1;
  int delta_window = 2;
  VadConfig vad;
  double preemph = kDefaultPreemphasis;

  std::pair<double, double> edges() const { return band_hz.value_or(BandEdges(band)); }
  int filters() const {
    if (num_filters > 0) return num_filters;
    return band == Band::kLow ? 8 : 24;
  }
  int fft_size() const {
    if (nfft > 0) return nfft;
    return band == Band::kLow ? 1024 : 256;
  }
  /// Cepstra per frame; capped below the filter count.
  int ceps() const { return std::min(num_ceps, filters() - 1); }

  /// Canonical text form; its hash is the feature digest.
  std::string canonical() const {
    const auto [lo, hi] = edges();
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "band=%s;f_low=%.17g;f_high=%.17g;filters=%d;ceps=%d;nfft=%d;"
                  "dataset=%s;delta_window=%d;vad_floor_db=%.17g;preemph=%.17g",
                  BandName(band).c_str(), lo, hi, filters(), ceps(), fft_size(),
                  DatasetName(dataset).c_str(), delta_window, vad.floor_db, preemph);
    return buf;
  }
  std::string digest() const { return Fnv1aHex(canonical()); }

  /// Output dimension implied by the dataset selection.
  int dim() const {
    const int c = ceps();
    switch (dataset) {
      case Dataset::kData1: return c;
      case Dataset::kData2: return c + 1;
      case Dataset::kData3: return 2 * c;
      case Dataset::kData4: return 3 * c;
      case Dataset::kData5: return 3 * (c + 1);
    }
    return 0;
  }

  void validate() const {
    if (filters() < 2) throw Error(ErrorCode::kBadConfig, "need at least 2 mel filters");
    if (num_ceps < 1) throw Error(ErrorCode::kBadConfig, "num_ceps must be >= 1");
    if (delta_window < 1) throw Error(ErrorCode::kBadConfig, "delta_window must be >= 1");
    if (!(preemph >= 0.0 && preemph < 1.0))
      throw Error(ErrorCode::kBadConfig, "pre-emphasis must lie in [0, 1)");
    if (!(vad.floor_db > 0.0)) throw Error(ErrorCode::kBadConfig, "vad floor_db must be > 0");
  }
};

struct FeatureSequence {
  Matrix vectors;  // T x D
  std::string config_tag;

  std::size_t dim() const { return vectors.cols(); }
};

inline double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelFilterbank {
  Matrix filters;  // M x (nfft/2 + 1)
  std::vector<int> boundary_bins;  // M + 2 strictly increasing bins
  double f_low = 0.0;
  double f_high = 0.0;
  int nfft = 0;
  int sample_rate = kCorpusSampleRate;

  std::size_t num_filters() const { return filters.rows(); }
};

/// Triangular filters whose M+2 edge points are equally spaced in mel between
/// f_low and f_high and snapped to the nearest FFT bin. Throws DegenerateBand
/// if snapping leaves fewer than M+2 distinct bins.
inline MelFilterbank BuildFilterbank(double f_low, double f_high, int num_filters, int nfft,
                                     int sample_rate) {
  if (nfft < 2 || !std::has_single_bit(static_cast<unsigned>(nfft)))
    throw Error(ErrorCode::kBadConfig, "nfft must be a power of two");
  if (!(f_low >= 0.0 && f_low < f_high && f_high <= sample_rate / 2.0))
    throw Error(ErrorCode::kBadConfig, "band must satisfy 0 <= f_low < f_high <= rate/2");
  if (num_filters < 1) throw Error(ErrorCode::kBadConfig, "need at least one filter");

  const double mel_lo = HzToMel(f_low), mel_hi = HzToMel(f_high);
  const int points = num_filters + 2;
  std::vector<int> bins(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double hz = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (points - 1));
    bins[static_cast<std::size_t>(i)] =
        static_cast<int>(std::floor(hz * nfft / sample_rate + 0.5));
  }
  const std::set<int> distinct(bins.begin(), bins.end());
  if (static_cast<int>(distinct.size()) < points) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "band %.0f-%.0f Hz maps to %zu distinct bins at nfft=%d; %d filters need %d",
                  f_low, f_high, distinct.size(), nfft, num_filters, points);
    throw Error(ErrorCode::kDegenerateBand, buf);
  }

  MelFilterbank fb;
  fb.f_low = f_low;
  fb.f_high = f_high;
  fb.nfft = nfft;
  fb.sample_rate = sample_rate;
  fb.boundary_bins = bins;
  fb.filters = Matrix(static_cast<std::size_t>(num_filters),
                      static_cast<std::size_t>(nfft / 2 + 1));
  for (int m = 0; m < num_filters; ++m) {
    const int left = bins[m], center = bins[m + 1], right = bins[m + 2];
    for (int k = left; k <= right; ++k) {
      const double w = k <= center ? double(k - left) / (center - left)
                                   : double(right - k) / (right - center);
      fb.filters(static_cast<std::size_t>(m), static_cast<std::size_t>(k)) = w;
    }
  }
  return fb;
}

inline MelFilterbank BuildFilterbank(Band band, int num_filters, int nfft, int sample_rate) {
  const auto [lo, hi] = BandEdges(band);
  return BuildFilterbank(lo, hi, num_filters, nfft, sample_rate);
}

namespace detail {

// In-place iterative radix-2 FFT; size must be a power of two.
inline void Fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(k));
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

}  // namespace detail

/// |DFT|^2 on bins 0..nfft/2 of the zero-padded frame.
inline std::vector<double> PowerSpectrum(std::span<const double> frame, int nfft) {
  if (static_cast<int>(frame.size()) > nfft)
    throw Error(ErrorCode::kDimensionMismatch, "frame longer than nfft");
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(nfft));
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  detail::Fft(buf);
  std::vector<double> power(static_cast<std::size_t>(nfft / 2 + 1));
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
  return power;
}

/// Cepstral coefficients 1..num_ceps of an already windowed frame:
/// power spectrum -> mel energies (floored) -> log -> orthonormal DCT-II.
inline std::vector<double> MfccFrame(std::span<const double> windowed,
                                     const MelFilterbank& fb, int num_ceps) {
  const auto power = PowerSpectrum(windowed, fb.nfft);
  const std::size_t m_count = fb.num_filters();
  std::vector<double> log_e(m_count);
  for (std::size_t m = 0; m < m_count; ++m)
    log_e[m] = std::log(std::max(Dot(fb.filters.row(m), power), kLogFloor));
  std::vector<double> ceps(static_cast<std::size_t>(num_ceps));
  const double scale = std::sqrt(2.0 / static_cast<double>(m_count));
  for (int k = 1; k <= num_ceps; ++k) {
    double s = 0.0;
    for (std::size_t m = 0; m < m_count; ++m)
      s += log_e[m] * std::cos(M_PI * k * (static_cast<double>(m) + 0.5) /
                               static_cast<double>(m_count));
    ceps[static_cast<std::size_t>(k - 1)] = scale * s;
  }
  return ceps;
}

/// Natural log of frame energy, floored at 1e-10.
inline double LogEnergy(std::span<const double> frame) {
  double e = 0.0;
  for (double s : frame) e += s * s;
  return std::log(std::max(e, kLogFloor));
}

/// Regression deltas over +-window frames with edge replication.
inline Matrix Deltas(const Matrix& seq, int window) {
  const std::size_t t_count = seq.rows(), d = seq.cols();
  Matrix out(t_count, d);
  if (t_count == 0) return out;
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += static_cast<double>(n) * n;
  denom *= 2.0;
  const auto last = static_cast<std::ptrdiff_t>(t_count) - 1;
  for (std::size_t t = 0; t < t_count; ++t) {
    for (int n = 1; n <= window; ++n) {
      const auto ahead = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t) + n, last));
      const auto behind = static_cast<std::size_t>(
          std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t) - n, 0));
      for (std::size_t j = 0; j < d; ++j)
        out(t, j) += n * (seq(ahead, j) - seq(behind, j));
    }
    for (std::size_t j = 0; j < d; ++j) out(t, j) /= denom;
  }
  return out;
}

namespace detail {

inline Matrix HStack(std::initializer_list<const Matrix*> parts) {
  std::size_t rows = (*parts.begin())->rows(), cols = 0;
  for (const Matrix* p : parts) cols += p->cols();
  Matrix out(rows, cols);
  for (std::size_t t = 0; t < rows; ++t) {
    std::size_t off = 0;
    for (const Matrix* p : parts) {
      std::copy(p->row(t).begin(), p->row(t).end(), out.row(t).begin() + off);
      off += p->cols();
    }
  }
  return out;
}

}  // namespace detail

/// Full frame-level pipeline for one utterance. Rows are laid out as
/// statics, then the delta block, then the delta-delta block.
inline FeatureSequence AssembleFeatures(const PcmSignal& signal, const FeatureConfig& cfg,
                                        const MelFilterbank& fb) {
  cfg.validate();
  const auto emphasized = PreEmphasize(signal, cfg.preemph);
  const FrameMatrix framed = FrameSignal(emphasized, kWindowMs, kShiftMs, signal.sample_rate);
  if (framed.num_frames() == 0)
    throw Error(ErrorCode::kEmptyUtterance,
                "signal of " + std::to_string(signal.samples.size()) +
                    " samples is shorter than one analysis window");
  const FrameMatrix voiced = RemoveSilence(framed, cfg.vad);
  if (voiced.num_frames() == 0) throw Error(ErrorCode::kEmptyUtterance, "VAD kept no frames");
  if (static_cast<int>(voiced.width()) > fb.nfft)
    throw Error(ErrorCode::kBadConfig, "analysis window exceeds nfft");

  const int c = cfg.ceps();
  const std::size_t t_count = voiced.num_frames();
  Matrix ceps(t_count, static_cast<std::size_t>(c));
  Matrix energy(t_count, 1);
  for (std::size_t t = 0; t < t_count; ++t) {
    energy(t, 0) = LogEnergy(voiced.frames.row(t));
    const auto windowed = HammingWindow(voiced.frames.row(t));
    const auto cc = MfccFrame(windowed, fb, c);
    std::copy(cc.begin(), cc.end(), ceps.row(t).begin());
  }

  FeatureSequence out;
  out.config_tag = cfg.digest();
  switch (cfg.dataset) {
    case Dataset::kData1:
      out.vectors = std::move(ceps);
      break;
    case Dataset::kData2:
      out.vectors = detail::HStack({&ceps, &energy});
      break;
    case Dataset::kData3: {
      const Matrix d1 = Deltas(ceps, cfg.delta_window);
      out.vectors = detail::HStack({&ceps, &d1});
      break;
    }
    case Dataset::kData4: {
      const Matrix d1 = Deltas(ceps, cfg.delta_window);
      const Matrix d2 = Deltas(d1, cfg.delta_window);
      out.vectors = detail::HStack({&ceps, &d1, &d2});
      break;
    }
    case Dataset::kData5: {
      const Matrix statics = detail::HStack({&ceps, &energy});
      const Matrix d1 = Deltas(statics, cfg.delta_window);
      const Matrix d2 = Deltas(d1, cfg.delta_window);
      out.vectors = detail::HStack({&statics, &d1, &d2});
      break;
    }
  }
  for (double v : out.vectors.data())
    if (!std::isfinite(v)) throw Error(ErrorCode::kEmptyUtterance, "non-finite feature value");
  return out;
}

inline MelFilterbank FilterbankFor(const FeatureConfig& cfg, int sample_rate = kCorpusSampleRate) {
  const auto [lo, hi] = cfg.edges();
  return BuildFilterbank(lo, hi, cfg.filters(), cfg.fft_size(), sample_rate);
}

inline FeatureSequence AssembleFeatures(const PcmSignal& signal, const FeatureConfig& cfg) {
  return AssembleFeatures(signal, cfg, FilterbankFor(cfg, signal.sample_rate));
}

// Feature cache: "EMFV", u32 version, u32 T, u32 D, then T*D little-endian
// doubles in row-major order.
inline constexpr std::uint32_t kFeatureCacheVersion = 1;

inline std::vector<std::uint8_t> EncodeFeatureCache(const Matrix& m) {
  std::vector<std::uint8_t> out{'E', 'M', 'F', 'V'};
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put32(kFeatureCacheVersion);
  put32(static_cast<std::uint32_t>(m.rows()));
  put32(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

inline Matrix DecodeFeatureCache(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "EMFV", 4) != 0)
    throw Error(ErrorCode::kIoError, "not a feature cache (bad magic)");
  const auto version = detail::ReadU32(bytes, 4);
  if (version != kFeatureCacheVersion)
    throw Error(ErrorCode::kIoError, "unsupported feature cache version " +
                                         std::to_string(version));
  const std::size_t rows = detail::ReadU32(bytes, 8), cols = detail::ReadU32(bytes, 12);
  if (bytes.size() != 16 + rows * cols * 8)
    throw Error(ErrorCode::kIoError, "feature cache size does not match its header");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(bytes[16 + 8 * i + static_cast<std::size_t>(b)])
              << (8 * b);
    m.data()[i] = std::bit_cast<double>(bits);
  }
  return m;
}

inline void WriteBytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace emovec
