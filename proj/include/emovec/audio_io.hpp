// emovec/audio_io.hpp

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

#include <array>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "emovec/core.hpp"

namespace emovec {

inline constexpr int kCorpusSampleRate = 16000;

enum class EmotionLabel { kAnger, kBoredom, kDisgust, kFear, kHappiness, kSadness, kNeutral };

inline constexpr std::array<EmotionLabel, 7> kAllEmotions = {
    EmotionLabel::kAnger,     EmotionLabel::kBoredom, EmotionLabel::kDisgust,
    EmotionLabel::kFear,      EmotionLabel::kHappiness, EmotionLabel::kSadness,
    EmotionLabel::kNeutral};

inline char EmotionCode(EmotionLabel e) {
  static constexpr char kCodes[] = {'A', 'B', 'D', 'F', 'H', 'S', 'N'};
  return kCodes[static_cast<int>(e)];
}

inline std::string EmotionName(EmotionLabel e) {
  static const char* kNames[] = {"anger",     "boredom", "disgust", "fear",
                                 "happiness", "sadness", "neutral"};
  return kNames[static_cast<int>(e)];
}

/// Accepts a one-letter code (A,B,D,F,H,S,N) or a full lowercase name.
inline std::optional<EmotionLabel> ParseEmotion(std::string_view text) {
  for (EmotionLabel e : kAllEmotions) {
    if (text.size() == 1 && text[0] == EmotionCode(e)) return e;
    if (text == EmotionName(e)) return e;
  }
  return std::nullopt;
}

struct PcmSignal {
  std::vector<std::int16_t> samples;
  int sample_rate = kCorpusSampleRate;

  friend bool operator==(const PcmSignal&, const PcmSignal&) = default;
};

namespace detail {

inline std::uint32_t ReadU32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

inline std::uint16_t ReadU16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline bool TagIs(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::equal(tag, tag + 4, b.begin() + static_cast<std::ptrdiff_t>(at));
}

}  // namespace detail

/// Decodes a RIFF/WAVE container holding 16-bit integer PCM at 16 kHz.
/// Multi-channel input is downmixed to mono by the per-frame arithmetic mean
/// (truncated toward zero).
inline PcmSignal ParseWav(std::span<const std::uint8_t> bytes) {
  using detail::ReadU16;
  using detail::ReadU32;
  if (bytes.size() < 12 || !detail::TagIs(bytes, 0, "RIFF") ||
      !detail::TagIs(bytes, 8, "WAVE"))
    throw Error(ErrorCode::kMalformedRiff, "missing RIFF/WAVE magic");
  if (static_cast<std::size_t>(ReadU32(bytes, 4)) + 8 > bytes.size())
    throw Error(ErrorCode::kMalformedRiff, "RIFF size exceeds file length");

  std::optional<std::uint16_t> channels;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = ReadU32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body)
      throw Error(ErrorCode::kMalformedRiff, "chunk overruns file");
    if (detail::TagIs(bytes, pos, "fmt ")) {
      if (size < 16) throw Error(ErrorCode::kMalformedRiff, "fmt chunk too short");
      const std::uint16_t format = ReadU16(bytes, body);
      const std::uint16_t bits = ReadU16(bytes, body + 14);
      if (format != 1)
        throw Error(ErrorCode::kUnsupportedFormat,
                    "audio format " + std::to_string(format) + " is not integer PCM");
      if (bits != 16)
        throw Error(ErrorCode::kUnsupportedFormat,
                    std::to_string(bits) + "-bit samples; only 16-bit is supported");
      channels = ReadU16(bytes, body + 2);
      rate = ReadU32(bytes, body + 4);
      if (*channels == 0) throw Error(ErrorCode::kMalformedRiff, "zero channels");
    } else if (detail::TagIs(bytes, pos, "data")) {
      data = bytes.subspan(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!channels) throw Error(ErrorCode::kMalformedRiff, "no fmt chunk");
  if (!have_data) throw Error(ErrorCode::kMalformedRiff, "no data chunk");
  if (rate != static_cast<std::uint32_t>(kCorpusSampleRate))
    throw Error(ErrorCode::kUnsupportedRate,
                std::to_string(rate) + " Hz; expected " + std::to_string(kCorpusSampleRate));

  const std::size_t frame_bytes = 2u * *channels;
  if (data.size() % frame_bytes != 0)
    throw Error(ErrorCode::kMalformedRiff, "data chunk is not a whole number of frames");
  PcmSignal out;
  out.sample_rate = static_cast<int>(rate);
  const std::size_t frames = data.size() / frame_bytes;
  out.samples.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    std::int64_t sum = 0;
    for (std::size_t c = 0; c < *channels; ++c)
      sum += static_cast<std::int16_t>(ReadU16(data, f * frame_bytes + 2 * c));
    out.samples.push_back(static_cast<std::int16_t>(sum / *channels));
  }
  if (out.samples.empty()) throw Error(ErrorCode::kEmptyInput, "no samples in data chunk");
  return out;
}

inline std::vector<std::uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline PcmSignal ReadWavFile(const std::string& path) {
  const auto bytes = ReadFileBytes(path);
  try {
    return ParseWav(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

struct UtteranceRecord {
  std::string id;
  std::string audio_path;
  EmotionLabel emotion = EmotionLabel::kNeutral;
  std::optional<std::string> speaker;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

namespace detail {

inline std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> SplitCsv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(Trim(line.substr(start, comma == std::string_view::npos
                                              ? std::string_view::npos
                                              : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Parses a `id,path,emotion[,speaker]` CSV manifest. Blank lines and lines
/// starting with '#' are ignored. Records keep file order.
inline std::vector<UtteranceRecord> LoadManifest(std::string_view text) {
  std::vector<UtteranceRecord> records;
  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  int id_col = -1, path_col = -1, emo_col = -1, spk_col = -1;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = detail::Trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto fields = detail::SplitCsv(trimmed);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const int col = static_cast<int>(i);
        if (fields[i] == "id") id_col = col;
        else if (fields[i] == "path") path_col = col;
        else if (fields[i] == "emotion") emo_col = col;
        else if (fields[i] == "speaker") spk_col = col;
      }
      if (id_col < 0 || path_col < 0 || emo_col < 0)
        throw Error(ErrorCode::kMissingColumn,
                    "header must name id, path and emotion columns (line " +
                        std::to_string(line_no) + ")");
      have_header = true;
      continue;
    }
    const int needed = std::max({id_col, path_col, emo_col});
    if (static_cast<int>(fields.size()) <= needed)
      throw Error(ErrorCode::kMissingColumn,
                  "line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields");
    UtteranceRecord rec;
    rec.id = fields[static_cast<std::size_t>(id_col)];
    rec.audio_path = fields[static_cast<std::size_t>(path_col)];
    const std::string& emo = fields[static_cast<std::size_t>(emo_col)];
    const auto label = ParseEmotion(emo);
    if (!label)
      throw Error(ErrorCode::kUnknownLabel,
                  "line " + std::to_string(line_no) + ": '" + emo + "'");
    rec.emotion = *label;
    if (spk_col >= 0 && spk_col < static_cast<int>(fields.size()) &&
        !fields[static_cast<std::size_t>(spk_col)].empty())
      rec.speaker = fields[static_cast<std::size_t>(spk_col)];
    if (!seen.insert(rec.id).second)
      throw Error(ErrorCode::kDuplicateId,
                  "'" + rec.id + "' repeated on line " + std::to_string(line_no));
    records.push_back(std::move(rec));
  }
  if (!have_header) throw Error(ErrorCode::kMissingColumn, "manifest has no header");
  return records;
}

/// Inverse of LoadManifest. Emits the speaker column only when some record
/// carries a speaker.
inline std::string RenderManifest(std::span<const UtteranceRecord> records) {
  const bool speakers = std::any_of(records.begin(), records.end(),
                                    [](const auto& r) { return r.speaker.has_value(); });
  std::string out = speakers ? "id,path,emotion,speaker\n" : "id,path,emotion\n";
  for (const auto& r : records) {
    out += r.id + "," + r.audio_path + "," + EmotionCode(r.emotion);
    if (speakers) out += "," + r.speaker.value_or("");
    out += "\n";
  }
  return out;
}

}  // namespace emovec
