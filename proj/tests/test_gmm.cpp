// tests/test_gmm.cpp

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

DiagGmm StandardNormal(std::size_t k = 1) {
  DiagGmm g;
  g.weights.assign(k, 1.0 / static_cast<double>(k));
  g.means = Matrix(k, 1, 0.0);
  g.variances = Matrix(k, 1, 1.0);
  return g;
}

// Direct evaluation of log sum_i w_i N(x; mu_i, diag(var_i)), no log-sum-exp.
double OracleLogPdf(const DiagGmm& g, std::span<const double> x) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < g.k(); ++i) {
    long double p = g.weights[i];
    for (std::size_t j = 0; j < g.d(); ++j) {
      const long double v = g.variances(i, j), diff = x[j] - g.means(i, j);
      p *= std::exp(-0.5L * diff * diff / v) / std::sqrt(2.0L * M_PI * v);
    }
    total += p;
  }
  return static_cast<double>(std::log(total));
}

TEST(GmmLogPdf, StandardNormalAtMode) {
  const std::vector<double> x = {0.0};
  EXPECT_NEAR(GmmLogPdf(StandardNormal(), x), -0.91894, 1e-5);
  EXPECT_NEAR(GmmLogPdf(StandardNormal(2), x), GmmLogPdf(StandardNormal(), x), 1e-12);
}

TEST(GmmLogPdf, MatchesDirectEvaluation) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const DiagGmm g = testing::RandomGmm(1 + rng.below(6), 1 + rng.below(5), rng, 1.0);
    std::vector<double> x(g.d());
    for (auto& v : x) v = rng.normal();
    EXPECT_NEAR(GmmLogPdf(g, x), OracleLogPdf(g, x), 1e-9);
  }
}

TEST(GmmLogPdf, StableFarFromAllComponents) {
  const std::vector<double> x = {1e4};
  const double lp = GmmLogPdf(StandardNormal(3), x);
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_NEAR(lp, -0.5 * 1e8 - 0.5 * std::log(2 * M_PI), 1e-6);
}

TEST(Responsibilities, DominanceAndIdenticalComponents) {
  DiagGmm g = StandardNormal(2);
  g.means(1, 0) = 100.0;
  const std::vector<double> x = {0.0};
  const auto r = Responsibilities(g, x);
  EXPECT_NEAR(r[0], 1.0, 1e-12);
  EXPECT_NEAR(r[1], 0.0, 1e-12);
  DiagGmm same = StandardNormal(3);
  same.weights = {0.2, 0.3, 0.5};
  const auto s = Responsibilities(same, x);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s[i], same.weights[i], 1e-12);
}

TEST(TrainUbm, SingleComponentClosedForm) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 50 + rng.below(500), d = 1 + rng.below(6);
    Matrix x(n, d);
    for (auto& v : x.data()) v = 3.0 * rng.normal() + 5.0;
    UbmTrainConfig cfg;
    cfg.k = 1;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto res = TrainUbm(x, cfg);
    for (std::size_t j = 0; j < d; ++j) {
      long double mean = 0.0L, sq = 0.0L;
      for (std::size_t t = 0; t < n; ++t) mean += x(t, j);
      mean /= n;
      for (std::size_t t = 0; t < n; ++t) sq += (x(t, j) - mean) * (x(t, j) - mean);
      EXPECT_NEAR(res.gmm.means(0, j), static_cast<double>(mean), 1e-9);
      EXPECT_NEAR(res.gmm.variances(0, j), static_cast<double>(sq / n), 1e-9);
    }
    EXPECT_DOUBLE_EQ(res.gmm.weights[0], 1.0);
  }
}

TEST(TrainUbm, RecoversTwoSeparatedClusters) {
  Rng rng(5);
  Matrix x(1000, 1);
  for (std::size_t t = 0; t < 1000; ++t) x(t, 0) = (t < 500 ? -10.0 : 10.0) + rng.normal();
  UbmTrainConfig cfg;
  cfg.k = 2;
  const auto res = TrainUbm(x, cfg);
  std::vector<double> means = {res.gmm.means(0, 0), res.gmm.means(1, 0)};
  const std::size_t lo = means[0] < means[1] ? 0 : 1;
  EXPECT_NEAR(res.gmm.means(lo, 0), -10.0, 0.2);
  EXPECT_NEAR(res.gmm.means(1 - lo, 0), 10.0, 0.2);
  EXPECT_NEAR(res.gmm.weights[0], 0.5, 0.05);
  EXPECT_NEAR(res.gmm.weights[1], 0.5, 0.05);
}

TEST(TrainUbm, LogLikelihoodNeverDecreases) {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const DiagGmm truth = testing::RandomGmm(2 + rng.below(4), 1 + rng.below(4), rng);
    const Matrix x = testing::SampleGmm(truth, 300 + rng.below(700), rng);
    UbmTrainConfig cfg;
    cfg.k = 1 + static_cast<int>(rng.below(8));
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.rel_ll_tol = 1e-12;
    cfg.max_em_iters = 60;
    const auto res = TrainUbm(x, cfg);
    const auto& h = res.summary.log_likelihood_history;
    ASSERT_GE(h.size(), 2u);
    for (std::size_t i = 1; i < h.size(); ++i) EXPECT_GE(h[i], h[i - 1] - 1e-8) << "trial " << trial;
    double sum = 0.0;
    for (double w : res.gmm.weights) {
      EXPECT_GT(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(TrainUbm, RejectsTooFewFrames) {
  UbmTrainConfig cfg;
  cfg.k = 8;
  try {
    TrainUbm(Matrix(4, 2, 1.0), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotEnoughData);
  }
}

TEST(TrainUbm, ConstantDataStaysFinite) {
  UbmTrainConfig cfg;
  cfg.k = 3;
  const auto res = TrainUbm(Matrix(100, 2, 4.0), cfg);
  for (double v : res.gmm.variances.data()) EXPECT_GT(v, 0.0);
  for (double v : res.gmm.means.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(TrainUbm, DeterministicAcrossJobCounts) {
  Rng rng(123);
  const DiagGmm truth = testing::RandomGmm(6, 5, rng);
  const Matrix x = testing::SampleGmm(truth, 9000, rng);
  UbmTrainConfig cfg;
  cfg.k = 8;
  cfg.seed = 42;
  const auto a = TrainUbm(x, cfg, 1);
  const auto b = TrainUbm(x, cfg, 4);
  EXPECT_EQ(a.gmm.means, b.gmm.means);
  EXPECT_EQ(a.gmm.variances, b.gmm.variances);
  EXPECT_EQ(a.gmm.weights, b.gmm.weights);
  EXPECT_EQ(a.summary.log_likelihood_history, b.summary.log_likelihood_history);
}

TEST(MapAdapt, LargeRelevanceKeepsPrior) {
  Rng rng(3);
  const DiagGmm ubm = testing::RandomGmm(4, 3, rng);
  const Matrix x = testing::SampleGmm(testing::RandomGmm(4, 3, rng), 200, rng);
  const DiagGmm a = MapAdaptMeans(ubm, x, {1e12});
  for (std::size_t i = 0; i < a.means.data().size(); ++i)
    EXPECT_NEAR(a.means.data()[i], ubm.means.data()[i], 1e-6);
  EXPECT_EQ(a.variances, ubm.variances);
  EXPECT_EQ(a.weights, ubm.weights);
}

TEST(MapAdapt, ZeroRelevanceGivesPosteriorMeans) {
  Rng rng(4);
  const DiagGmm ubm = testing::RandomGmm(3, 2, rng, 1.0);
  const Matrix x = testing::SampleGmm(ubm, 150, rng);
  const DiagGmm a = MapAdaptMeans(ubm, x, {0.0});
  std::vector<double> occ(3, 0.0);
  Matrix first(3, 2);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    // posterior by direct evaluation
    std::vector<double> p(3);
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      DiagGmm one;
      one.weights = {1.0};
      one.means = Matrix(1, 2);
      one.variances = Matrix(1, 2);
      for (std::size_t j = 0; j < 2; ++j) {
        one.means(0, j) = ubm.means(i, j);
        one.variances(0, j) = ubm.variances(i, j);
      }
      p[i] = ubm.weights[i] * std::exp(OracleLogPdf(one, x.row(t)));
      s += p[i];
    }
    for (std::size_t i = 0; i < 3; ++i) {
      occ[i] += p[i] / s;
      for (std::size_t j = 0; j < 2; ++j) first(i, j) += p[i] / s * x(t, j);
    }
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(a.means(i, j), first(i, j) / occ[i], 1e-9);
}

TEST(MapAdapt, SingleComponentClosedForm) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    DiagGmm ubm;
    ubm.weights = {1.0};
    ubm.means = Matrix(1, 3);
    ubm.variances = Matrix(1, 3, 2.0);
    for (auto& v : ubm.means.data()) v = rng.normal();
    const std::size_t t_count = 1 + rng.below(300);
    Matrix x(t_count, 3);
    for (auto& v : x.data()) v = 4.0 * rng.normal() + 1.0;
    const DiagGmm a = MapAdaptMeans(ubm, x, {16.0});
    for (std::size_t j = 0; j < 3; ++j) {
      double m = 0.0;
      for (std::size_t t = 0; t < t_count; ++t) m += x(t, j);
      m /= static_cast<double>(t_count);
      const double want = (t_count * m + 16.0 * ubm.means(0, j)) / (t_count + 16.0);
      EXPECT_NEAR(a.means(0, j), want, 1e-9);
    }
  }
}

TEST(MapAdapt, ErrorsAndEmptyComponents) {
  DiagGmm ubm = StandardNormal(2);
  ubm.means(1, 0) = 1e6;  // never gets posterior mass
  const Matrix x(10, 1, 0.5);
  const DiagGmm a = MapAdaptMeans(ubm, x, {16.0});
  EXPECT_EQ(a.means(1, 0), 1e6);
  EXPECT_THROW(MapAdaptMeans(ubm, Matrix(0, 1), {16.0}), Error);
  try {
    MapAdaptMeans(ubm, Matrix(3, 2, 1.0), {16.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(MapAdapt, FrameOrderDoesNotMatter) {
  Rng rng(10);
  const DiagGmm ubm = testing::RandomGmm(5, 4, rng);
  Matrix x = testing::SampleGmm(ubm, 120, rng);
  const DiagGmm a = MapAdaptMeans(ubm, x, {16.0});
  std::vector<std::size_t> perm(x.rows());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  Matrix y(0, x.cols());
  for (std::size_t i : perm) y.append_row(x.row(i));
  const DiagGmm b = MapAdaptMeans(ubm, y, {16.0});
  for (std::size_t i = 0; i < a.means.data().size(); ++i)
    EXPECT_NEAR(a.means.data()[i], b.means.data()[i], 1e-9);
}

TEST(Supervector, Layout) {
  DiagGmm g;
  g.weights = {0.5, 0.5};
  g.means = Matrix(2, 2);
  g.means(0, 0) = 1;
  g.means(0, 1) = 2;
  g.means(1, 0) = 3;
  g.means(1, 1) = 4;
  g.variances = Matrix(2, 2, 1.0);
  const auto sv = ExtractSupervector(g);
  EXPECT_EQ(sv.values, (std::vector<double>{1, 2, 3, 4}));
  DiagGmm big;
  big.weights.assign(128, 1.0 / 128);
  big.means = Matrix(128, 39);
  big.variances = Matrix(128, 39, 1.0);
  EXPECT_EQ(ExtractSupervector(big).values.size(), 4992u);
}

TEST(GmmJson, RoundTripIsExact) {
  Rng rng(8);
  const DiagGmm g = testing::RandomGmm(7, 5, rng);
  std::string digest;
  const DiagGmm back = GmmFromJson(Json::parse(GmmToJson(g, "abc").dump(1)), &digest);
  EXPECT_EQ(back.weights, g.weights);
  EXPECT_EQ(back.means, g.means);
  EXPECT_EQ(back.variances, g.variances);
  EXPECT_EQ(digest, "abc");
  Json bad = GmmToJson(g, "abc");
  bad["k"] = 3;
  EXPECT_THROW(GmmFromJson(bad), Error);
  bad = GmmToJson(g, "abc");
  bad["format"] = "other";
  EXPECT_THROW(GmmFromJson(bad), Error);
}

}  // namespace
}  // namespace emovec
