// emovec/svm.hpp

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

// Soft-margin SVMs trained by SMO, combined one-vs-one by voting.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emovec/core.hpp"

namespace emovec {

enum class KernelKind { kLinear, kRbf };

/// Linear: x.v.  Rbf: exp(-|x - v|^2 / (2 sigma)); sigma divides the squared
/// distance directly (it is not squared).
struct KernelSpec {
  KernelKind kind = KernelKind::kLinear;
  double sigma = 1.0;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline double RbfFromSquaredDistance(double sq, double sigma) {
  return std::exp(-sq / (2.0 * sigma));
}

inline double KernelEval(const KernelSpec& spec, std::span<const double> x,
                         std::span<const double> v) {
  if (x.size() != v.size())
    throw Error(ErrorCode::kDimensionMismatch, "kernel arguments of dim " +
                                                   std::to_string(x.size()) + " and " +
                                                   std::to_string(v.size()));
  if (spec.kind == KernelKind::kLinear) return Dot(x, v);
  return RbfFromSquaredDistance(SquaredDistance(x, v), spec.sigma);
}

struct BinarySvm {
  Matrix support_vectors;
  std::vector<double> coeffs;  // alpha_i * y_i
  double bias = 0.0;
  KernelSpec kernel;
  std::pair<std::string, std::string> class_pair;  // positive side first
};

struct BinaryTrainSummary {
  long iterations = 0;
  bool converged = false;
  double objective = 0.0;  // dual objective sum(a) - a'Qa/2
};

struct GridSpec {
  std::vector<double> c_values{0.1, 1.0, 10.0, 100.0};
  bool linear = true;
  bool rbf = true;
  int sigma_exp_min = -6;  // sigma = 2^e * median pairwise squared distance
  int sigma_exp_max = 10;
};

struct TrainParams {
  double C = 1.0;
  double tol = 1e-3;
  int max_passes = 1000;  // iteration cap = max_passes * sample count
  KernelSpec kernel;
  GridSpec grid;
};

struct BinaryTrainResult {
  BinarySvm model;
  BinaryTrainSummary summary;
  std::vector<double> alpha;  // one per training sample
};

inline double DecisionValue(const BinarySvm& m, std::span<const double> x) {
  if (m.support_vectors.rows() > 0 && x.size() != m.support_vectors.cols())
    throw Error(ErrorCode::kDimensionMismatch,
                "input of dim " + std::to_string(x.size()) + " vs support vectors of dim " +
                    std::to_string(m.support_vectors.cols()));
  double f = m.bias;
  for (std::size_t s = 0; s < m.coeffs.size(); ++s)
    f += m.coeffs[s] * KernelEval(m.kernel, x, m.support_vectors.row(s));
  return f;
}

namespace detail {

inline constexpr std::size_t kGramCacheLimit = 2000;

/// Kernel rows for the dual solver: a full Gram matrix, or rows computed on
/// demand from the samples into two scratch slots.
class KernelRows {
 public:
  KernelRows(Matrix gram) : gram_(std::move(gram)), n_(gram_.rows()) {
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = gram_(i, i);
  }
  KernelRows(const Matrix& samples, KernelSpec spec)
      : samples_(&samples), spec_(spec), n_(samples.rows()) {
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i)
      diag_[i] = KernelEval(spec_, samples.row(i), samples.row(i));
    for (auto& s : slot_) s.assign(n_, 0.0);
  }

  std::size_t size() const { return n_; }
  double diag(std::size_t i) const { return diag_[i]; }

  // slot selects the scratch buffer when rows are computed on demand.
  std::span<const double> row(std::size_t i, int slot) {
    if (!samples_) return gram_.row(i);
    if (slot_index_[slot] != i) {
      for (std::size_t t = 0; t < n_; ++t)
        slot_[slot][t] = KernelEval(spec_, samples_->row(i), samples_->row(t));
      slot_index_[slot] = i;
    }
    return slot_[slot];
  }

 private:
  Matrix gram_;
  const Matrix* samples_ = nullptr;
  KernelSpec spec_;
  std::size_t n_ = 0;
  std::vector<double> diag_;
  std::vector<double> slot_[2];
  std::size_t slot_index_[2] = {static_cast<std::size_t>(-1), static_cast<std::size_t>(-1)};
};

struct DualSolution {
  std::vector<double> alpha;
  double rho = 0.0;  // f(x) = sum alpha_i y_i K(x_i, x) - rho
  BinaryTrainSummary summary;
};

// Minimizes a'Qa/2 - e'a subject to 0 <= a <= C, y'a = 0 with Q_ij =
// y_i y_j K_ij, using maximal-violating-pair working sets. Stops when
// max_{I_up} -y G - min_{I_low} -y G < tol.
inline DualSolution SolveDual(KernelRows& kernel, std::span<const int> y, double C,
                              double tol, long max_iter) {
  const std::size_t n = kernel.size();
  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto& a = sol.alpha;
  auto in_up = [&](std::size_t t) { return y[t] > 0 ? a[t] < C : a[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return y[t] > 0 ? a[t] > 0.0 : a[t] < C; };

  long iter = 0;
  for (;; ++iter) {
    double up_max = -std::numeric_limits<double>::infinity();
    double low_min = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > up_max) {
        up_max = v;
        i = t;
      }
      if (in_low(t) && v < low_min) {
        low_min = v;
        j = t;
      }
    }
    if (i == n || j == n || up_max - low_min < tol) {
      sol.summary.converged = true;
      break;
    }
    if (iter >= max_iter) break;

    const auto ki = kernel.row(i, 0);
    const auto kj = kernel.row(j, 1);
    const double yi = y[i], yj = y[j];
    const double qii = kernel.diag(i), qjj = kernel.diag(j), qij = yi * yj * ki[j];
    const double old_ai = a[i], old_aj = a[j];
    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = 1e-12;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = C - diff;
        }
      } else if (a[j] > C) {
        a[j] = C;
        a[i] = C + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = 1e-12;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = sum - C;
        }
      } else if (a[j] < 0.0) {
        a[j] = 0.0;
        a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) {
          a[j] = C;
          a[i] = sum - C;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = sum;
      }
    }
    const double dai = a[i] - old_ai, daj = a[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t)
      grad[t] += y[t] * (yi * ki[t] * dai + yj * kj[t] * daj);
  }
  sol.summary.iterations = iter;

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (a[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
    objective += a[t] - 0.5 * a[t] * (grad[t] + 1.0);
  }
  if (free_count > 0) sol.rho = free_sum / static_cast<double>(free_count);
  else if (std::isfinite(ub) && std::isfinite(lb)) sol.rho = 0.5 * (ub + lb);
  else sol.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  sol.summary.objective = objective;
  return sol;
}

inline void CheckBinaryInputs(const Matrix& samples, std::span<const int> labels,
                              const TrainParams& params) {
  if (samples.rows() != labels.size())
    throw Error(ErrorCode::kLengthMismatch, "samples and labels differ in length");
  if (!(params.C > 0.0) || !(params.tol > 0.0))
    throw Error(ErrorCode::kBadConfig, "C and tol must be positive");
  if (params.kernel.kind == KernelKind::kRbf && !(params.kernel.sigma > 0.0))
    throw Error(ErrorCode::kBadConfig, "rbf sigma must be positive");
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l == 1) pos = true;
    else if (l == -1) neg = true;
    else throw Error(ErrorCode::kBadConfig, "binary labels must be +1 or -1");
  }
  if (!pos || !neg) throw Error(ErrorCode::kSingleClass, "binary training needs both labels");
}

}  // namespace detail

/// Trains one soft-margin machine. Non-convergence within the iteration cap
/// is reported through summary.converged rather than thrown.
inline BinaryTrainResult TrainBinary(const Matrix& samples, std::span<const int> labels,
                                     const KernelSpec& kernel, const TrainParams& params) {
  TrainParams p = params;
  p.kernel = kernel;
  detail::CheckBinaryInputs(samples, labels, p);
  const std::size_t n = samples.rows();
  const long max_iter = static_cast<long>(std::max(1, p.max_passes)) * static_cast<long>(n);

  std::optional<detail::KernelRows> rows;
  if (n <= detail::kGramCacheLimit) {
    Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        gram(i, j) = gram(j, i) = KernelEval(kernel, samples.row(i), samples.row(j));
    rows.emplace(std::move(gram));
  } else {
    rows.emplace(samples, kernel);
  }
  auto sol = detail::SolveDual(*rows, labels, p.C, p.tol, max_iter);

  BinaryTrainResult out;
  out.model.kernel = kernel;
  out.model.bias = -sol.rho;
  out.model.class_pair = {"+1", "-1"};
  out.model.support_vectors = Matrix(0, samples.cols());
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.alpha[i] > 1e-12) {
      out.model.support_vectors.append_row(samples.row(i));
      out.model.coeffs.push_back(sol.alpha[i] * labels[i]);
    }
  }
  out.summary = sol.summary;
  out.alpha = std::move(sol.alpha);
  return out;
}

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != mean.size())
      throw Error(ErrorCode::kDimensionMismatch,
                  "input of dim " + std::to_string(x.size()) + " vs standardizer dim " +
                      std::to_string(mean.size()));
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
    return out;
  }
};

/// Per-dimension mean and population standard deviation, floored at 1e-12.
inline Standardizer FitStandardizer(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(t, j);
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x(t, j) - s.mean[j];
      s.scale[j] += diff * diff;
    }
  for (double& v : s.scale) v = std::max(std::sqrt(v / static_cast<double>(n)), 1e-12);
  return s;
}

inline Matrix ApplyStandardizer(const Standardizer& s, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const auto z = s.apply(x.row(t));
    std::copy(z.begin(), z.end(), out.row(t).begin());
  }
  return out;
}

struct OvoSvmModel {
  std::vector<std::string> classes;
  std::vector<BinarySvm> machines;  // pairs (a, b), a < b in class order
  std::optional<Standardizer> standardizer;

  std::size_t input_dim() const {
    if (standardizer) return standardizer->mean.size();
    for (const auto& m : machines)
      if (m.support_vectors.rows() > 0) return m.support_vectors.cols();
    return 0;
  }
};

struct Prediction {
  std::string label;
  std::vector<int> votes;                // per class
  std::vector<double> margin_sums;       // signed decision values toward each class
  std::vector<double> abs_margin_sums;   // |decision value| summed per class
};

namespace detail {

/// Decision values of all machines -> label. Votes first, then the signed
/// margin sum of the tied classes, then class order.
inline Prediction VoteOvo(std::size_t num_classes, std::span<const double> decisions,
                          const std::vector<std::string>& classes) {
  Prediction p;
  p.votes.assign(num_classes, 0);
  p.margin_sums.assign(num_classes, 0.0);
  p.abs_margin_sums.assign(num_classes, 0.0);
  std::size_t m = 0;
  for (std::size_t a = 0; a < num_classes; ++a)
    for (std::size_t b = a + 1; b < num_classes; ++b, ++m) {
      const double f = decisions[m];
      ++p.votes[f > 0.0 ? a : b];
      p.margin_sums[a] += f;
      p.margin_sums[b] -= f;
      p.abs_margin_sums[a] += std::abs(f);
      p.abs_margin_sums[b] += std::abs(f);
    }
  std::size_t best = 0;
  for (std::size_t c = 1; c < num_classes; ++c) {
    if (p.votes[c] > p.votes[best] ||
        (p.votes[c] == p.votes[best] && p.margin_sums[c] > p.margin_sums[best]))
      best = c;
  }
  p.label = classes[best];
  return p;
}

/// Pairwise dot products and squared distances of a sample set; kernels for
/// any subset are read from here instead of recomputed.
struct PairwiseTable {
  Matrix dots;
  Matrix sqdist;

  double kernel(const KernelSpec& spec, std::size_t i, std::size_t j) const {
    return spec.kind == KernelKind::kLinear ? dots(i, j)
                                            : RbfFromSquaredDistance(sqdist(i, j), spec.sigma);
  }
};

inline PairwiseTable BuildPairwiseTable(const Matrix& x, int jobs) {
  const std::size_t n = x.rows();
  PairwiseTable t{Matrix(n, n), Matrix(n, n)};
  ParallelFor(n, jobs, [&](std::size_t i) {
    for (std::size_t j = i; j < n; ++j) {
      t.dots(i, j) = Dot(x.row(i), x.row(j));
      t.sqdist(i, j) = SquaredDistance(x.row(i), x.row(j));
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      t.dots(i, j) = t.dots(j, i);
      t.sqdist(i, j) = t.sqdist(j, i);
    }
  return t;
}

struct TableMachine {
  std::vector<std::size_t> members;  // sample indices
  std::vector<double> coeffs;        // alpha * y, parallel to members
  double bias = 0.0;
  BinaryTrainSummary summary;
};

// One machine per class pair on the given sample subset. class_of[i] indexes
// classes; pairs the subset lacks on either side raise ModelError.
inline std::vector<TableMachine> TrainOvoOnTable(const PairwiseTable& table,
                                                 std::span<const int> class_of,
                                                 std::span<const std::size_t> subset,
                                                 const std::vector<std::string>& classes,
                                                 const TrainParams& params, int jobs) {
  const std::size_t nc = classes.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < nc; ++a)
    for (std::size_t b = a + 1; b < nc; ++b) pairs.emplace_back(a, b);
  std::vector<TableMachine> machines(pairs.size());
  ParallelFor(pairs.size(), jobs, [&](std::size_t m) {
    const auto [a, b] = pairs[m];
    TableMachine& tm = machines[m];
    std::vector<int> y;
    for (std::size_t idx : subset) {
      const auto c = static_cast<std::size_t>(class_of[idx]);
      if (c == a || c == b) {
        tm.members.push_back(idx);
        y.push_back(c == a ? 1 : -1);
      }
    }
    const bool has_a = std::find(y.begin(), y.end(), 1) != y.end();
    const bool has_b = std::find(y.begin(), y.end(), -1) != y.end();
    if (!has_a || !has_b)
      throw Error(ErrorCode::kModelError,
                  "pair (" + classes[a] + ", " + classes[b] + "): SingleClass");
    const std::size_t n = tm.members.size();
    Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        gram(i, j) = gram(j, i) = table.kernel(params.kernel, tm.members[i], tm.members[j]);
    KernelRows rows(std::move(gram));
    const long max_iter =
        static_cast<long>(std::max(1, params.max_passes)) * static_cast<long>(n);
    auto sol = SolveDual(rows, y, params.C, params.tol, max_iter);
    tm.bias = -sol.rho;
    tm.summary = sol.summary;
    tm.coeffs.resize(n);
    for (std::size_t i = 0; i < n; ++i) tm.coeffs[i] = sol.alpha[i] * y[i];
  });
  return machines;
}

inline double TableDecision(const PairwiseTable& table, const TableMachine& m,
                            const KernelSpec& spec, std::size_t sample) {
  double f = m.bias;
  for (std::size_t s = 0; s < m.members.size(); ++s)
    if (m.coeffs[s] != 0.0) f += m.coeffs[s] * table.kernel(spec, sample, m.members[s]);
  return f;
}

inline std::vector<int> ClassIndices(std::span<const std::string> labels,
                                     const std::vector<std::string>& classes) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    const auto it = std::find(classes.begin(), classes.end(), l);
    if (it == classes.end()) throw Error(ErrorCode::kUnknownClass, "label '" + l + "'");
    out.push_back(static_cast<int>(it - classes.begin()));
  }
  return out;
}

}  // namespace detail

inline Prediction Predict(const OvoSvmModel& model, std::span<const double> x) {
  const std::size_t dim = model.input_dim();
  if (dim != 0 && x.size() != dim)
    throw Error(ErrorCode::kDimensionMismatch, "input of dim " + std::to_string(x.size()) +
                                                   " vs model dim " + std::to_string(dim));
  std::vector<double> z(x.begin(), x.end());
  if (model.standardizer) z = model.standardizer->apply(x);
  std::vector<double> decisions;
  decisions.reserve(model.machines.size());
  for (const auto& m : model.machines) decisions.push_back(DecisionValue(m, z));
  return detail::VoteOvo(model.classes.size(), decisions, model.classes);
}

struct OvoTrainSummary {
  std::vector<BinaryTrainSummary> machines;
};

/// One machine per unordered class pair, optionally on z-scored inputs.
/// `classes` fixes the class order used for pairs and tie-breaking.
inline OvoSvmModel TrainOvo(const Matrix& x, std::span<const std::string> labels,
                            const std::vector<std::string>& classes, const TrainParams& params,
                            bool standardize, int jobs = 1, OvoTrainSummary* summary = nullptr) {
  if (classes.size() < 2) throw Error(ErrorCode::kModelError, "need at least two classes");
  if (x.rows() != labels.size())
    throw Error(ErrorCode::kLengthMismatch, "samples and labels differ in length");
  const auto class_of = detail::ClassIndices(labels, classes);
  OvoSvmModel model;
  model.classes = classes;
  Matrix z = x;
  if (standardize) {
    model.standardizer = FitStandardizer(x);
    z = ApplyStandardizer(*model.standardizer, x);
  }
  const auto table = detail::BuildPairwiseTable(z, jobs);
  std::vector<std::size_t> all(x.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto machines = detail::TrainOvoOnTable(table, class_of, all, classes, params, jobs);
  std::size_t m = 0;
  for (std::size_t a = 0; a < classes.size(); ++a)
    for (std::size_t b = a + 1; b < classes.size(); ++b, ++m) {
      BinarySvm bs;
      bs.kernel = params.kernel;
      bs.bias = machines[m].bias;
      bs.class_pair = {classes[a], classes[b]};
      bs.support_vectors = Matrix(0, z.cols());
      for (std::size_t s = 0; s < machines[m].members.size(); ++s) {
        if (std::abs(machines[m].coeffs[s]) > 1e-12) {
          bs.support_vectors.append_row(z.row(machines[m].members[s]));
          bs.coeffs.push_back(machines[m].coeffs[s]);
        }
      }
      model.machines.push_back(std::move(bs));
      if (summary) summary->machines.push_back(machines[m].summary);
    }
  return model;
}

inline OvoSvmModel TrainOvo(const Matrix& x, std::span<const std::string> labels,
                            const TrainParams& params, bool standardize, int jobs = 1) {
  std::vector<std::string> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return TrainOvo(x, labels, classes, params, standardize, jobs);
}

struct GridPointScore {
  KernelSpec kernel;
  double C = 0.0;
  double accuracy = 0.0;
};

struct GridSelection {
  TrainParams best;
  double best_accuracy = 0.0;
  double sigma_scale = 0.0;  // median pairwise squared distance
  std::vector<GridPointScore> scores;
};

/// Fold id per sample: each class is shuffled with `seed` and dealt
/// round-robin, so every fold holds floor or ceil of count/folds per class.
inline std::vector<int> StratifiedFolds(std::span<const int> class_of, std::size_t num_classes,
                                        int folds, std::uint64_t seed) {
  std::vector<int> fold(class_of.size(), 0);
  Rng rng(seed);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < class_of.size(); ++i)
      if (static_cast<std::size_t>(class_of[i]) == c) members.push_back(i);
    rng.shuffle(members);
    for (std::size_t p = 0; p < members.size(); ++p)
      fold[members[p]] = static_cast<int>(p % static_cast<std::size_t>(folds));
  }
  return fold;
}

/// Candidate kernels in tie-break order: linear before rbf, then smaller C,
/// then smaller sigma.
inline std::vector<std::pair<KernelSpec, double>> GridCandidates(const GridSpec& grid,
                                                                 double sigma_scale) {
  std::vector<double> cs = grid.c_values;
  std::sort(cs.begin(), cs.end());
  std::vector<std::pair<KernelSpec, double>> out;
  if (grid.linear)
    for (double c : cs) out.push_back({{KernelKind::kLinear, 1.0}, c});
  if (grid.rbf)
    for (double c : cs)
      for (int e = grid.sigma_exp_min; e <= grid.sigma_exp_max; ++e)
        out.push_back({{KernelKind::kRbf, std::ldexp(sigma_scale, e)}, c});
  return out;
}

/// Stratified k-fold cross-validated accuracy over the grid; returns the best
/// point (ties resolved by GridCandidates order).
inline GridSelection GridSelect(const Matrix& x, std::span<const std::string> labels,
                                const std::vector<std::string>& classes,
                                const TrainParams& params, int folds, bool standardize,
                                std::uint64_t seed, int jobs = 1) {
  if (folds < 2) throw Error(ErrorCode::kBadConfig, "grid selection needs >= 2 folds");
  const auto class_of = detail::ClassIndices(labels, classes);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto count = std::count(class_of.begin(), class_of.end(), static_cast<int>(c));
    if (count < folds)
      throw Error(ErrorCode::kTooFewSamples, "class '" + classes[c] + "' has " +
                                                 std::to_string(count) + " samples for " +
                                                 std::to_string(folds) + " folds");
  }
  Matrix z = x;
  if (standardize) z = ApplyStandardizer(FitStandardizer(x), x);
  const auto table = detail::BuildPairwiseTable(z, jobs);

  GridSelection sel;
  {
    std::vector<double> sq;
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = i + 1; j < z.rows(); ++j) sq.push_back(table.sqdist(i, j));
    if (!sq.empty()) {
      auto mid = sq.begin() + static_cast<std::ptrdiff_t>((sq.size() - 1) / 2);
      std::nth_element(sq.begin(), mid, sq.end());
      sel.sigma_scale = *mid;
    }
    if (!(sel.sigma_scale > 0.0)) sel.sigma_scale = 1.0;
  }
  const auto candidates = GridCandidates(params.grid, sel.sigma_scale);
  if (candidates.empty()) throw Error(ErrorCode::kBadConfig, "empty parameter grid");
  const auto fold_of = StratifiedFolds(class_of, classes.size(), folds, seed);

  sel.scores.resize(candidates.size());
  ParallelFor(candidates.size(), jobs, [&](std::size_t g) {
    TrainParams p = params;
    p.kernel = candidates[g].first;
    p.C = candidates[g].second;
    std::size_t correct = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < fold_of.size(); ++i)
        (fold_of[i] == f ? test : train).push_back(i);
      const auto machines = detail::TrainOvoOnTable(table, class_of, train, classes, p, 1);
      std::vector<double> decisions(machines.size());
      for (std::size_t t : test) {
        for (std::size_t m = 0; m < machines.size(); ++m)
          decisions[m] = detail::TableDecision(table, machines[m], p.kernel, t);
        const auto pred = detail::VoteOvo(classes.size(), decisions, classes);
        if (pred.label == classes[static_cast<std::size_t>(class_of[t])]) ++correct;
      }
    }
    sel.scores[g] = {p.kernel, p.C, static_cast<double>(correct) / static_cast<double>(x.rows())};
  });

  std::size_t best = 0;
  for (std::size_t g = 1; g < sel.scores.size(); ++g)
    if (sel.scores[g].accuracy > sel.scores[best].accuracy) best = g;
  sel.best = params;
  sel.best.kernel = sel.scores[best].kernel;
  sel.best.C = sel.scores[best].C;
  sel.best_accuracy = sel.scores[best].accuracy;
  return sel;
}

}  // namespace emovec
