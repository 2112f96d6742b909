// emovec/serialize.hpp

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

// JSON documents for mixture and SVM models. Doubles are written in shortest
// round-trip form, so load(save(m)) reproduces m bit for bit.

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "emovec/core.hpp"
#include "emovec/gmm.hpp"
#include "emovec/svm.hpp"

namespace emovec {

using Json = nlohmann::json;

namespace detail {

inline Json MatrixToJson(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r)
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

inline Matrix MatrixFromJson(const Json& j, std::size_t cols_if_empty) {
  Matrix m(0, cols_if_empty);
  for (const auto& row : j) m.append_row(row.get<std::vector<double>>());
  return m;
}

inline void ExpectFormat(const Json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format || j.value("version", 0) != 1)
    throw Error(ErrorCode::kIoError, std::string("not a ") + format + " version 1 document");
}

}  // namespace detail

inline Json GmmToJson(const DiagGmm& gmm, const std::string& feature_digest) {
  Json j;
  j["format"] = "emovec-gmm";
  j["version"] = 1;
  j["k"] = gmm.k();
  j["d"] = gmm.d();
  j["weights"] = gmm.weights;
  j["means"] = detail::MatrixToJson(gmm.means);
  j["variances"] = detail::MatrixToJson(gmm.variances);
  j["feature_config"] = feature_digest;
  return j;
}

inline DiagGmm GmmFromJson(const Json& j, std::string* feature_digest = nullptr) {
  detail::ExpectFormat(j, "emovec-gmm");
  try {
    DiagGmm gmm;
    const auto k = j.at("k").get<std::size_t>();
    const auto d = j.at("d").get<std::size_t>();
    gmm.weights = j.at("weights").get<std::vector<double>>();
    gmm.means = detail::MatrixFromJson(j.at("means"), d);
    gmm.variances = detail::MatrixFromJson(j.at("variances"), d);
    if (gmm.k() != k || gmm.means.rows() != k || gmm.variances.rows() != k ||
        gmm.means.cols() != d || gmm.variances.cols() != d)
      throw Error(ErrorCode::kIoError, "mixture shapes disagree with k/d");
    if (feature_digest) *feature_digest = j.value("feature_config", "");
    return gmm;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIoError, std::string("malformed emovec-gmm: ") + e.what());
  }
}

inline Json SvmToJson(const OvoSvmModel& model, const std::string& feature_digest,
                      const std::string& config_digest) {
  Json j;
  j["format"] = "emovec-svm";
  j["version"] = 1;
  j["classes"] = model.classes;
  if (model.standardizer)
    j["standardizer"] = {{"mean", model.standardizer->mean},
                         {"scale", model.standardizer->scale}};
  else
    j["standardizer"] = nullptr;
  Json machines = Json::array();
  for (const auto& m : model.machines) {
    Json mj;
    mj["pair"] = {m.class_pair.first, m.class_pair.second};
    mj["kernel"] = {{"kind", m.kernel.kind == KernelKind::kLinear ? "linear" : "rbf"},
                    {"sigma", m.kernel.sigma}};
    mj["support_vectors"] = detail::MatrixToJson(m.support_vectors);
    mj["coeffs"] = m.coeffs;
    mj["bias"] = m.bias;
    machines.push_back(std::move(mj));
  }
  j["machines"] = std::move(machines);
  j["feature_config"] = feature_digest;
  j["config_digest"] = config_digest;
  return j;
}

inline OvoSvmModel SvmFromJson(const Json& j, std::string* feature_digest = nullptr) {
  detail::ExpectFormat(j, "emovec-svm");
  try {
    OvoSvmModel model;
    model.classes = j.at("classes").get<std::vector<std::string>>();
    const auto& st = j.at("standardizer");
    if (!st.is_null())
      model.standardizer = Standardizer{st.at("mean").get<std::vector<double>>(),
                                        st.at("scale").get<std::vector<double>>()};
    for (const auto& mj : j.at("machines")) {
      BinarySvm m;
      const auto pair = mj.at("pair").get<std::vector<std::string>>();
      if (pair.size() != 2) throw Error(ErrorCode::kIoError, "machine pair must have 2 labels");
      m.class_pair = {pair[0], pair[1]};
      const auto kind = mj.at("kernel").at("kind").get<std::string>();
      if (kind != "linear" && kind != "rbf")
        throw Error(ErrorCode::kIoError, "unknown kernel kind '" + kind + "'");
      m.kernel.kind = kind == "linear" ? KernelKind::kLinear : KernelKind::kRbf;
      m.kernel.sigma = mj.at("kernel").at("sigma").get<double>();
      m.coeffs = mj.at("coeffs").get<std::vector<double>>();
      const std::size_t dim =
          model.standardizer ? model.standardizer->mean.size() : 0;
      m.support_vectors = detail::MatrixFromJson(mj.at("support_vectors"), dim);
      m.bias = mj.at("bias").get<double>();
      if (m.coeffs.size() != m.support_vectors.rows())
        throw Error(ErrorCode::kIoError, "coeffs and support vectors differ in count");
      model.machines.push_back(std::move(m));
    }
    const std::size_t nc = model.classes.size();
    if (model.machines.size() != nc * (nc - 1) / 2)
      throw Error(ErrorCode::kIoError, "machine count does not match class count");
    if (feature_digest) *feature_digest = j.value("feature_config", "");
    return model;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIoError, std::string("malformed emovec-svm: ") + e.what());
  }
}

inline Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIoError, path + ": " + e.what());
  }
}

inline void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << text;
}

inline void WriteJsonFile(const std::string& path, const Json& j) {
  WriteTextFile(path, j.dump(1) + "\n");
}

}  // namespace emovec
