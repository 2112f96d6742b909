// tests/test_cli.cpp

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

#include <sstream>

#include "emovec/cli.hpp"
#include "test_support.hpp"

namespace emovec {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult RunCli(std::vector<std::string> args) {
  args.insert(args.begin(), "emovec");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::Run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small 7-emotion corpus whose classes differ in pitch and spectral tilt.
fs::path WriteCorpus(const std::string& name, int per_class, bool with_missing = false) {
  const fs::path dir = testing::TempDir(name);
  Rng rng(99);
  std::string manifest = "id,path,emotion\n";
  int c = 0;
  for (EmotionLabel e : kAllEmotions) {
    for (int i = 0; i < per_class; ++i) {
      const std::string id = std::string(1, EmotionCode(e)) + std::to_string(i);
      const double f0 = 100.0 + 45.0 * c + 5.0 * rng.uniform();
      const double tilt = 0.35 + 0.09 * c;
      testing::WriteWavFile((dir / (id + ".wav")).string(),
                            testing::SynthUtterance(f0, tilt, 0.35, rng));
      manifest += id + "," + id + ".wav," + EmotionCode(e) + "\n";
    }
    ++c;
  }
  if (with_missing) manifest += "ghost,ghost.wav,A\n";
  std::ofstream(dir / "manifest.csv") << manifest;
  return dir;
}

const std::vector<std::string> kFast = {"--set", "ubm.k=4",       "--set", "svm.folds=2",
                                        "--set", "svm.grid.rbf=false", "--set", "svm.grid.c=1"};

std::vector<std::string> With(std::vector<std::string> args, const std::vector<std::string>& more) {
  args.insert(args.end(), more.begin(), more.end());
  return args;
}

void RunPipeline(const fs::path& corpus, const fs::path& work, const std::string& jobs) {
  fs::create_directories(work);
  const auto cache = (work / "cache").string();
  const auto index = (work / "cache" / "index.json").string();
  const auto ubm = (work / "ubm.json").string();
  const auto svm = (work / "svm.json").string();
  const std::vector<std::string> common = With(kFast, {"--jobs", jobs, "--seed", "5"});
  auto r = RunCli(With({"extract", "--manifest", (corpus / "manifest.csv").string(), "--out", cache}, common));
  ASSERT_EQ(r.code, 0) << r.err;
  r = RunCli(With({"train-ubm", "--index", index, "--out", ubm}, common));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ubm: k=4"), std::string::npos) << r.out;
  r = RunCli(With({"train-svm", "--index", index, "--ubm", ubm, "--out", svm}, common));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("machines=21"), std::string::npos) << r.out;
  r = RunCli(With({"evaluate", "--index", index, "--ubm", ubm, "--svm", svm, "--out",
                   (work / "report.json").string()},
                  common));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("overall"), std::string::npos) << r.out;
}

TEST(Cli, FullPipelineSucceeds) {
  const auto corpus = WriteCorpus("cli_full", 6);
  const auto work = corpus / "work";
  RunPipeline(corpus, work, "1");
  const Json report = ReadJsonFile((work / "report.json").string());
  EXPECT_EQ(report["scheme"], "categorical");
  EXPECT_EQ(report["classes"].size(), 7u);
  EXPECT_TRUE(report.contains("timing"));
  const Json svm = ReadJsonFile((work / "svm.json").string());
  EXPECT_EQ(svm["machines"].size(), 21u);
  EXPECT_EQ(svm["format"], "emovec-svm");
}

TEST(Cli, ArtifactsIndependentOfJobs) {
  const auto corpus = WriteCorpus("cli_jobs", 6);
  RunPipeline(corpus, corpus / "w1", "1");
  RunPipeline(corpus, corpus / "w4", "4");
  for (const char* f : {"ubm.json", "svm.json", "cache/index.json"})
    EXPECT_EQ(Slurp(corpus / "w1" / f), Slurp(corpus / "w4" / f)) << f;
  Json a = ReadJsonFile((corpus / "w1" / "report.json").string());
  Json b = ReadJsonFile((corpus / "w4" / "report.json").string());
  a.erase("timing");
  b.erase("timing");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Cli, EvaluateFromManifestMatchesIndex) {
  const auto corpus = WriteCorpus("cli_manifest", 6);
  const auto work = corpus / "work";
  RunPipeline(corpus, work, "2");
  const auto r = RunCli(With({"evaluate", "--manifest", (corpus / "manifest.csv").string(), "--ubm",
                              (work / "ubm.json").string(), "--svm", (work / "svm.json").string(),
                              "--out", (work / "report2.json").string(), "--seed", "5"},
                             kFast));
  ASSERT_EQ(r.code, 0) << r.err;
  Json a = ReadJsonFile((work / "report.json").string());
  Json b = ReadJsonFile((work / "report2.json").string());
  EXPECT_EQ(a["confusion"], b["confusion"]);
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto corpus = WriteCorpus("cli_usage", 2);
  const auto manifest = (corpus / "manifest.csv").string();
  EXPECT_EQ(RunCli({"extract", "--manifest", manifest, "--scheme", "bogus"}).code, 2);
  EXPECT_EQ(RunCli({"extract"}).code, 2);
  EXPECT_EQ(RunCli({}).code, 2);
  EXPECT_EQ(RunCli({"frobnicate"}).code, 2);
  EXPECT_EQ(RunCli({"extract", "--manifest", manifest, "--set", "nosuch.key=1"}).code, 2);
  EXPECT_EQ(RunCli({"extract", "--manifest", manifest, "--set", "ubm.k=abc"}).code, 2);
  EXPECT_EQ(RunCli({"extract", "--manifest", manifest, "--jobs", "0"}).code, 2);
  EXPECT_EQ(RunCli({"reproduce", "nosuchrow", "--manifest", manifest}).code, 2);
  EXPECT_EQ(RunCli({"--help"}).code, 0);
}

TEST(Cli, MissingAudioIsDataError) {
  const auto corpus = WriteCorpus("cli_missing", 2, true);
  const auto r = RunCli({"extract", "--manifest", (corpus / "manifest.csv").string(), "--out",
                         (corpus / "cache").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ghost"), std::string::npos) << r.err;
  const Json idx = ReadJsonFile((corpus / "cache" / "index.json").string());
  EXPECT_EQ(idx["entries"].size(), 14u);
}

TEST(Cli, MismatchedFeaturesAreDataErrors) {
  const auto corpus = WriteCorpus("cli_mismatch", 6);
  const auto manifest = (corpus / "manifest.csv").string();
  const auto d1 = (corpus / "d1").string(), d5 = (corpus / "d5").string();
  ASSERT_EQ(RunCli(With({"extract", "--manifest", manifest, "--out", d1}, kFast)).code, 0);
  ASSERT_EQ(RunCli(With({"extract", "--manifest", manifest, "--out", d5, "--set",
                         "features.dataset=data5"}, kFast)).code, 0);
  const auto ubm = (corpus / "ubm.json").string();
  ASSERT_EQ(RunCli(With({"train-ubm", "--index", d1 + "/index.json", "--out", ubm}, kFast)).code, 0);
  const auto svm_out = (corpus / "svm.json").string();
  auto r = RunCli(With({"train-svm", "--index", d5 + "/index.json", "--ubm", ubm, "--out", svm_out},
                       kFast));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--force"), std::string::npos) << r.err;
  r = RunCli(With({"train-svm", "--index", d5 + "/index.json", "--ubm", ubm, "--out", svm_out,
                   "--force"},
                  kFast));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("dim"), std::string::npos) << r.err;
}

TEST(Cli, SchemeRestrictsClasses) {
  const auto corpus = WriteCorpus("cli_scheme", 6);
  const auto manifest = (corpus / "manifest.csv").string();
  const auto cache = (corpus / "cache").string();
  const auto common = With(kFast, {"--scheme", "arousal"});
  ASSERT_EQ(RunCli(With({"extract", "--manifest", manifest, "--out", cache}, common)).code, 0);
  const auto index = cache + "/index.json";
  const auto ubm = (corpus / "ubm.json").string(), svm = (corpus / "svm.json").string();
  ASSERT_EQ(RunCli(With({"train-ubm", "--index", index, "--out", ubm}, common)).code, 0);
  auto r = RunCli(With({"train-svm", "--index", index, "--ubm", ubm, "--out", svm}, common));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("machines=1"), std::string::npos) << r.out;
  // a binary arousal model cannot be scored under the valence scheme
  r = RunCli(With({"evaluate", "--index", index, "--ubm", ubm, "--svm", svm, "--out",
                   (corpus / "r.json").string(), "--scheme", "valence"},
                  kFast));
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, ConfigFileAndCacheDirEnvironment) {
  const auto corpus = WriteCorpus("cli_config", 2);
  std::ofstream(corpus / "run.cfg") << "# comment\nfeatures.dataset = data2\nseed = 9\n";
  const auto cache = corpus / "envcache";
  ::setenv("EMOVEC_CACHE_DIR", cache.c_str(), 1);
  const auto r = RunCli({"extract", "--manifest", (corpus / "manifest.csv").string(), "--config",
                         (corpus / "run.cfg").string()});
  ::unsetenv("EMOVEC_CACHE_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("dim 13"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(cache / "index.json"));
}

}  // namespace
}  // namespace emovec
