// emovec/gmm.hpp

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

// Diagonal-covariance mixtures: UBM training by k-means-initialized EM, MAP
// adaptation of the component means, and supervector stacking.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "emovec/core.hpp"

namespace emovec {

struct DiagGmm {
  std::vector<double> weights;  // K
  Matrix means;                 // K x D
  Matrix variances;             // K x D

  std::size_t k() const { return weights.size(); }
  std::size_t d() const { return means.cols(); }

  friend bool operator==(const DiagGmm&, const DiagGmm&) = default;
};

struct Supervector {
  std::vector<double> values;  // K*D, component-major
  std::size_t k = 0;
  std::size_t d = 0;
};

struct UbmTrainConfig {
  int k = 128;
  std::uint64_t seed = 0;
  int max_em_iters = 100;
  double rel_ll_tol = 1e-5;
  int kmeans_iters = 10;
  double var_floor_scale = 1e-3;
};

struct MapConfig {
  double relevance_factor = 16.0;
};

struct UbmTrainSummary {
  int em_iterations = 0;
  bool converged = false;
  double final_log_likelihood = 0.0;
  std::vector<double> log_likelihood_history;  // total LL before each M-step
};

struct UbmTrainResult {
  DiagGmm gmm;
  UbmTrainSummary summary;
};

/// Per-component constants for fast scoring: log w_i - 0.5*sum(log 2*pi*var)
/// and the inverse variances.
class GmmScorer {
 public:
  explicit GmmScorer(const DiagGmm& gmm) : gmm_(gmm), inv_var_(gmm.k(), gmm.d()) {
    const std::size_t k = gmm.k(), d = gmm.d();
    if (gmm.means.rows() != k || gmm.variances.rows() != k || gmm.variances.cols() != d)
      throw Error(ErrorCode::kDimensionMismatch, "inconsistent mixture parameter shapes");
    log_const_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      double c = std::log(gmm.weights[i]);
      for (std::size_t j = 0; j < d; ++j) {
        c -= 0.5 * std::log(2.0 * M_PI * gmm.variances(i, j));
        inv_var_(i, j) = 1.0 / gmm.variances(i, j);
      }
      log_const_[i] = c;
    }
  }

  /// Fills out[i] = log(w_i N(x; mu_i, var_i)) and returns the log-sum-exp.
  double component_log_likelihoods(std::span<const double> x, std::span<double> out) const {
    if (x.size() != gmm_.d())
      throw Error(ErrorCode::kDimensionMismatch,
                  "vector of dim " + std::to_string(x.size()) + " scored against dim " +
                      std::to_string(gmm_.d()) + " mixture");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gmm_.k(); ++i) {
      const auto mu = gmm_.means.row(i);
      const auto iv = inv_var_.row(i);
      double q = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - mu[j];
        q += diff * diff * iv[j];
      }
      out[i] = log_const_[i] - 0.5 * q;
      best = std::max(best, out[i]);
    }
    if (!std::isfinite(best)) return best;
    double s = 0.0;
    for (std::size_t i = 0; i < gmm_.k(); ++i) s += std::exp(out[i] - best);
    return best + std::log(s);
  }

  const DiagGmm& gmm() const { return gmm_; }

 private:
  const DiagGmm& gmm_;
  Matrix inv_var_;
  std::vector<double> log_const_;
};

inline double GmmLogPdf(const DiagGmm& gmm, std::span<const double> x) {
  GmmScorer scorer(gmm);
  std::vector<double> tmp(gmm.k());
  return scorer.component_log_likelihoods(x, tmp);
}

inline std::vector<double> Responsibilities(const DiagGmm& gmm, std::span<const double> x) {
  GmmScorer scorer(gmm);
  std::vector<double> post(gmm.k());
  const double total = scorer.component_log_likelihoods(x, post);
  double sum = 0.0;
  for (double& p : post) {
    p = std::exp(p - total);
    sum += p;
  }
  for (double& p : post) p /= sum;
  return post;
}

namespace detail {

inline constexpr std::size_t kStatsChunk = 2048;

// Zeroth, first and centred second order statistics. Second order stats are
// taken around a reference mean (the current model mean) to limit
// cancellation in var = E[(x-ref)^2] - (mean-ref)^2.
struct GmmStats {
  double log_likelihood = 0.0;
  std::vector<double> occupancy;  // K
  Matrix first;                   // K x D, sum gamma * (x - ref)
  Matrix second;                  // K x D, sum gamma * (x - ref)^2

  GmmStats(std::size_t k, std::size_t d) : occupancy(k), first(k, d), second(k, d) {}

  void merge(const GmmStats& o) {
    log_likelihood += o.log_likelihood;
    for (std::size_t i = 0; i < occupancy.size(); ++i) occupancy[i] += o.occupancy[i];
    for (std::size_t i = 0; i < first.data().size(); ++i) {
      first.data()[i] += o.first.data()[i];
      second.data()[i] += o.second.data()[i];
    }
  }
};

// Fixed chunking and in-order merging make the totals independent of `jobs`.
inline GmmStats AccumulateStats(const DiagGmm& gmm, const Matrix& data, int jobs) {
  const std::size_t k = gmm.k(), d = gmm.d();
  const GmmScorer scorer(gmm);
  const std::size_t chunks = (data.rows() + kStatsChunk - 1) / kStatsChunk;
  std::vector<GmmStats> partial(chunks, GmmStats(k, d));
  ParallelFor(chunks, jobs, [&](std::size_t c) {
    GmmStats& st = partial[c];
    std::vector<double> post(k);
    const std::size_t end = std::min(data.rows(), (c + 1) * kStatsChunk);
    for (std::size_t t = c * kStatsChunk; t < end; ++t) {
      const auto x = data.row(t);
      const double total = scorer.component_log_likelihoods(x, post);
      st.log_likelihood += total;
      for (std::size_t i = 0; i < k; ++i) {
        const double g = std::exp(post[i] - total);
        if (g == 0.0) continue;
        st.occupancy[i] += g;
        const auto mu = gmm.means.row(i);
        auto f = st.first.row(i);
        auto s = st.second.row(i);
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = x[j] - mu[j];
          f[j] += g * diff;
          s[j] += g * diff * diff;
        }
      }
    }
  });
  GmmStats total(k, d);
  for (const auto& p : partial) total.merge(p);
  return total;
}

inline std::vector<double> GlobalVariance(const Matrix& data) {
  const std::size_t d = data.cols();
  std::vector<double> mean(d), var(d);
  for (std::size_t t = 0; t < data.rows(); ++t)
    for (std::size_t j = 0; j < d; ++j) mean[j] += data(t, j);
  for (double& m : mean) m /= static_cast<double>(data.rows());
  for (std::size_t t = 0; t < data.rows(); ++t)
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = data(t, j) - mean[j];
      var[j] += diff * diff;
    }
  for (double& v : var) v /= static_cast<double>(data.rows());
  return var;
}

inline void FloorAndNormalizeWeights(std::vector<double>& w) {
  const double floor = 1e-6 / static_cast<double>(w.size());
  double sum = 0.0;
  for (double& x : w) {
    x = std::max(x, floor);
    sum += x;
  }
  for (double& x : w) x /= sum;
}

// Index of the nearest centre (ties to the lowest index) for every row.
inline std::vector<std::size_t> AssignNearest(const Matrix& data, const Matrix& centers,
                                              int jobs) {
  std::vector<std::size_t> assign(data.rows());
  const std::size_t chunks = (data.rows() + kStatsChunk - 1) / kStatsChunk;
  ParallelFor(chunks, jobs, [&](std::size_t c) {
    const std::size_t end = std::min(data.rows(), (c + 1) * kStatsChunk);
    for (std::size_t t = c * kStatsChunk; t < end; ++t) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < centers.rows(); ++i) {
        const double dist = SquaredDistance(data.row(t), centers.row(i));
        if (dist < best) {
          best = dist;
          assign[t] = i;
        }
      }
    }
  });
  return assign;
}

// k-means++ seeding (D^2 sampling) followed by Lloyd refinement.
inline Matrix KMeans(const Matrix& data, std::size_t k, int iters, Rng& rng, int jobs) {
  const std::size_t n = data.rows(), d = data.cols();
  Matrix centers(k, d);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(data.row(pick).begin(), data.row(pick).end(), centers.row(c).begin());
    const std::size_t chunks = (n + kStatsChunk - 1) / kStatsChunk;
    ParallelFor(chunks, jobs, [&](std::size_t ch) {
      const std::size_t end = std::min(n, (ch + 1) * kStatsChunk);
      for (std::size_t t = ch * kStatsChunk; t < end; ++t)
        nearest[t] = std::min(nearest[t], SquaredDistance(data.row(t), centers.row(c)));
    });
    if (c + 1 == k) break;
    double total = 0.0;
    for (double v : nearest) total += v;
    if (total <= 0.0) {
      pick = rng.below(n);  // every point already coincides with a centre
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t t = 0; t < n; ++t) {
      acc += nearest[t];
      if (acc > target) {
        pick = t;
        break;
      }
    }
  }

  for (int it = 0; it < iters; ++it) {
    const auto assign = AssignNearest(data, centers, jobs);
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k);
    for (std::size_t t = 0; t < n; ++t) {
      ++counts[assign[t]];
      auto s = sums.row(assign[t]);
      for (std::size_t j = 0; j < d; ++j) s[j] += data(t, j);
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (counts[i] == 0) continue;  // empty cluster keeps its centre
      for (std::size_t j = 0; j < d; ++j)
        centers(i, j) = sums(i, j) / static_cast<double>(counts[i]);
    }
  }
  return centers;
}

}  // namespace detail

/// Fits a K-component diagonal GMM to pooled frames. Initialization is seeded
/// k-means; EM stops once the relative total log-likelihood gain drops below
/// cfg.rel_ll_tol or after cfg.max_em_iters M-steps. Variances are floored at
/// cfg.var_floor_scale times the global per-dimension variance; weights at
/// 1e-6/K before renormalization.
inline UbmTrainResult TrainUbm(const Matrix& data, const UbmTrainConfig& cfg, int jobs = 1) {
  if (cfg.k < 1 || !(cfg.rel_ll_tol > 0.0) || !(cfg.var_floor_scale > 0.0))
    throw Error(ErrorCode::kBadConfig, "invalid UBM training config");
  const auto k = static_cast<std::size_t>(cfg.k);
  const std::size_t n = data.rows(), d = data.cols();
  if (n < k)
    throw Error(ErrorCode::kNotEnoughData, std::to_string(n) + " frames for " +
                                               std::to_string(k) + " components");
  if (d == 0) throw Error(ErrorCode::kDimensionMismatch, "zero-dimensional features");

  const auto global_var = detail::GlobalVariance(data);
  std::vector<double> var_floor(d);
  for (std::size_t j = 0; j < d; ++j)
    var_floor[j] = std::max(cfg.var_floor_scale * global_var[j], 1e-12);

  Rng rng(cfg.seed);
  const Matrix centers = detail::KMeans(data, k, cfg.kmeans_iters, rng, jobs);

  DiagGmm gmm;
  gmm.means = centers;
  gmm.variances = Matrix(k, d);
  gmm.weights.assign(k, 0.0);
  {
    const auto assign = detail::AssignNearest(data, centers, jobs);
    std::vector<std::size_t> counts(k);
    for (std::size_t t = 0; t < n; ++t) {
      ++counts[assign[t]];
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = data(t, j) - centers(assign[t], j);
        gmm.variances(assign[t], j) += diff * diff;
      }
    }
    for (std::size_t i = 0; i < k; ++i) {
      gmm.weights[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
      for (std::size_t j = 0; j < d; ++j) {
        const double v = counts[i] > 0 ? gmm.variances(i, j) / static_cast<double>(counts[i])
                                       : global_var[j];
        gmm.variances(i, j) = std::max(v, var_floor[j]);
      }
    }
    detail::FloorAndNormalizeWeights(gmm.weights);
  }

  UbmTrainSummary summary;
  for (int iter = 0;; ++iter) {
    const detail::GmmStats st = detail::AccumulateStats(gmm, data, jobs);
    summary.log_likelihood_history.push_back(st.log_likelihood);
    summary.final_log_likelihood = st.log_likelihood;
    if (iter > 0) {
      const double prev = summary.log_likelihood_history[summary.log_likelihood_history.size() - 2];
      if ((st.log_likelihood - prev) / std::abs(prev) < cfg.rel_ll_tol) {
        summary.converged = true;
        break;
      }
    }
    if (iter == cfg.max_em_iters) break;

    for (std::size_t i = 0; i < k; ++i) {
      const double occ = st.occupancy[i];
      gmm.weights[i] = occ / static_cast<double>(n);
      if (occ < 1e-10) continue;  // starved component keeps its parameters
      for (std::size_t j = 0; j < d; ++j) {
        const double shift = st.first(i, j) / occ;
        const double var = st.second(i, j) / occ - shift * shift;
        gmm.means(i, j) += shift;
        gmm.variances(i, j) = std::max(var, var_floor[j]);
      }
    }
    detail::FloorAndNormalizeWeights(gmm.weights);
    summary.em_iterations = iter + 1;
  }
  return {std::move(gmm), std::move(summary)};
}

/// Relevance-MAP update of the means only; weights and variances are copied
/// from the UBM. A component with zero occupancy keeps its prior mean.
inline DiagGmm MapAdaptMeans(const DiagGmm& ubm, const Matrix& feats, const MapConfig& cfg) {
  if (feats.rows() == 0) throw Error(ErrorCode::kEmptyUtterance, "no frames to adapt on");
  if (feats.cols() != ubm.d())
    throw Error(ErrorCode::kDimensionMismatch,
                "features of dim " + std::to_string(feats.cols()) + " vs UBM dim " +
                    std::to_string(ubm.d()));
  if (!(cfg.relevance_factor >= 0.0))
    throw Error(ErrorCode::kBadConfig, "relevance factor must be >= 0");
  const std::size_t k = ubm.k(), d = ubm.d();
  const GmmScorer scorer(ubm);
  std::vector<double> occ(k), post(k);
  Matrix first(k, d);
  for (std::size_t t = 0; t < feats.rows(); ++t) {
    const auto x = feats.row(t);
    const double total = scorer.component_log_likelihoods(x, post);
    for (std::size_t i = 0; i < k; ++i) {
      const double g = std::exp(post[i] - total);
      occ[i] += g;
      auto f = first.row(i);
      for (std::size_t j = 0; j < d; ++j) f[j] += g * x[j];
    }
  }
  DiagGmm out = ubm;
  for (std::size_t i = 0; i < k; ++i) {
    if (occ[i] == 0.0) continue;
    const double alpha = occ[i] / (occ[i] + cfg.relevance_factor);
    for (std::size_t j = 0; j < d; ++j)
      out.means(i, j) = alpha * (first(i, j) / occ[i]) + (1.0 - alpha) * ubm.means(i, j);
  }
  return out;
}

inline Supervector ExtractSupervector(const DiagGmm& adapted) {
  return {adapted.means.data(), adapted.k(), adapted.d()};
}

}  // namespace emovec
