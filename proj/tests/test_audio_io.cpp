// tests/test_audio_io.cpp

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

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace emovec {
namespace {

using testing::MakeWav;

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no emovec::Error thrown";
  return ErrorCode::kIoError;
}

TEST(ParseWav, MinimalMonoFile) {
  const auto bytes = MakeWav({0, 100, -100}, 16000);
  const PcmSignal s = ParseWav(bytes);
  EXPECT_EQ(s.samples, (std::vector<std::int16_t>{0, 100, -100}));
  EXPECT_EQ(s.sample_rate, 16000);
}

TEST(ParseWav, StereoDownmixIsMean) {
  const auto bytes = MakeWav({10, 30, -7, 3}, 16000, 2);
  const PcmSignal s = ParseWav(bytes);
  EXPECT_EQ(s.samples, (std::vector<std::int16_t>{20, -2}));
}

TEST(ParseWav, RejectsOtherRates) {
  const auto bytes = MakeWav({1, 2, 3}, 44100);
  EXPECT_EQ(CodeOf([&] { ParseWav(bytes); }), ErrorCode::kUnsupportedRate);
}

TEST(ParseWav, RejectsFloatAndEightBit) {
  EXPECT_EQ(CodeOf([&] { ParseWav(MakeWav({1, 2}, 16000, 1, 3)); }),
            ErrorCode::kUnsupportedFormat);
  EXPECT_EQ(CodeOf([&] { ParseWav(MakeWav({1, 2}, 16000, 1, 1, 8)); }),
            ErrorCode::kUnsupportedFormat);
}

TEST(ParseWav, RejectsBrokenContainers) {
  auto bytes = MakeWav({1, 2, 3}, 16000);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(CodeOf([&] { ParseWav(bad_magic); }), ErrorCode::kMalformedRiff);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  EXPECT_EQ(CodeOf([&] { ParseWav(truncated); }), ErrorCode::kMalformedRiff);
  std::vector<std::uint8_t> tiny = {'R', 'I', 'F', 'F'};
  EXPECT_EQ(CodeOf([&] { ParseWav(tiny); }), ErrorCode::kMalformedRiff);
}

TEST(ParseWav, SkipsUnknownChunks) {
  auto bytes = MakeWav({5, 6}, 16000);
  // insert a LIST chunk of odd size (padded) between fmt and data
  std::vector<std::uint8_t> list = {'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  bytes.insert(bytes.begin() + 36, list.begin(), list.end());
  const std::uint32_t riff = static_cast<std::uint32_t>(bytes.size() - 8);
  for (int i = 0; i < 4; ++i) bytes[4 + i] = static_cast<std::uint8_t>(riff >> (8 * i));
  EXPECT_EQ(ParseWav(bytes).samples, (std::vector<std::int16_t>{5, 6}));
}

TEST(ParseWav, RoundTripsRandomSignals) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int16_t> s(1 + rng.below(500));
    for (auto& v : s) v = static_cast<std::int16_t>(static_cast<int>(rng.below(65536)) - 32768);
    EXPECT_EQ(ParseWav(MakeWav(s, 16000)).samples, s);
  }
}

TEST(ParseWav, ReadsFromDisk) {
  const auto dir = testing::TempDir("audio_io");
  const auto path = (dir / "a.wav").string();
  testing::WriteWavFile(path, {1, -1, 2});
  EXPECT_EQ(ReadWavFile(path).samples, (std::vector<std::int16_t>{1, -1, 2}));
  EXPECT_EQ(CodeOf([&] { ReadWavFile((dir / "missing.wav").string()); }), ErrorCode::kIoError);
}

TEST(Manifest, ParsesMinimal) {
  const auto recs = LoadManifest("id,path,emotion\nu1,a.wav,A\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].id, "u1");
  EXPECT_EQ(recs[0].audio_path, "a.wav");
  EXPECT_EQ(recs[0].emotion, EmotionLabel::kAnger);
  EXPECT_FALSE(recs[0].speaker.has_value());
}

TEST(Manifest, EmotionCodes) {
  const auto recs = LoadManifest(
      "id,path,emotion\na,x,A\nb,x,B\nd,x,D\nf,x,F\nh,x,H\ns,x,S\nn,x,N\nw,x,sadness\n");
  const std::vector<EmotionLabel> want = {
      EmotionLabel::kAnger,     EmotionLabel::kBoredom, EmotionLabel::kDisgust,
      EmotionLabel::kFear,      EmotionLabel::kHappiness, EmotionLabel::kSadness,
      EmotionLabel::kNeutral,   EmotionLabel::kSadness};
  ASSERT_EQ(recs.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(recs[i].emotion, want[i]);
}

TEST(Manifest, Errors) {
  EXPECT_EQ(CodeOf([] { LoadManifest("id,path,emotion\nu1,a,A\nu1,b,S\n"); }),
            ErrorCode::kDuplicateId);
  EXPECT_EQ(CodeOf([] { LoadManifest("id,path,emotion\nu1,a,Q\n"); }), ErrorCode::kUnknownLabel);
  EXPECT_EQ(CodeOf([] { LoadManifest("id,path\nu1,a\n"); }), ErrorCode::kMissingColumn);
  EXPECT_EQ(CodeOf([] { LoadManifest("id,path,emotion\nu1,a\n"); }), ErrorCode::kMissingColumn);
  try {
    LoadManifest("id,path,emotion\n# c\nu1,a,A\nu2,b,Z\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Manifest, HeaderOrderCommentsAndSpeaker) {
  const auto recs = LoadManifest("# corpus\nemotion , speaker, id,path\n\nH, 03 ,x1, f.wav\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].id, "x1");
  EXPECT_EQ(recs[0].audio_path, "f.wav");
  EXPECT_EQ(recs[0].speaker, std::optional<std::string>("03"));
}

TEST(Manifest, RenderRoundTrip) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<UtteranceRecord> recs;
    const bool speakers = trial % 2 == 0;
    for (std::size_t i = 0, n = 1 + rng.below(20); i < n; ++i) {
      UtteranceRecord r;
      r.id = "u" + std::to_string(trial) + "_" + std::to_string(i);
      r.audio_path = "dir/" + std::to_string(rng.below(1000)) + ".wav";
      r.emotion = kAllEmotions[rng.below(7)];
      if (speakers) r.speaker = std::to_string(rng.below(10));
      recs.push_back(r);
    }
    EXPECT_EQ(LoadManifest(RenderManifest(recs)), recs);
  }
}

}  // namespace
}  // namespace emovec
