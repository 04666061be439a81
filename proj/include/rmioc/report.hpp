/*
 Copyright 2026 The rmioc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmioc/types.hpp"

namespace rmioc {

enum class RecoveryStatus { Recovered, InsufficientObservations, Degenerate };

inline std::string to_string(RecoveryStatus s) {
  switch (s) {
    case RecoveryStatus::Recovered:
      return "recovered";
    case RecoveryStatus::InsufficientObservations:
      return "insufficient_observations";
    case RecoveryStatus::Degenerate:
      return "degenerate";
  }
  return "unknown";
}

/// One rank-index sample: kappa of H(t, l). NaN marks lengths where it is undefined.
struct KappaSample {
  int l = 0;
  double kappa = 0.0;
};

struct RecoveryReport {
  std::string method = "recovery-matrix";
  RecoveryStatus status = RecoveryStatus::Recovered;
  int t = 1;
  int l_min = 0;  // minimal length when recovered, otherwise the last length examined
  Vector omega;   // sum-normalised
  Vector lambda;
  std::vector<KappaSample> kappa_history;
  std::optional<double> e_omega;

  bool recovered() const { return status == RecoveryStatus::Recovered; }
};

namespace detail {

// JSON has no representation for non-finite numbers; +inf is written as the
// string "inf" and NaN as null.
inline nlohmann::json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nan("");
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("unexpected numeric string '" + s + "'");
  }
  return j.get<double>();
}

inline nlohmann::json json_vector(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(json_number(v[i]));
  return arr;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number_from_json(j[i]);
  return v;
}

}  // namespace detail

/// {t, l_min, omega, lambda, kappa_history, e_omega?, status, method}
inline nlohmann::json to_json(const RecoveryReport& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["status"] = to_string(r.status);
  j["t"] = r.t;
  j["l_min"] = r.l_min;
  j["omega"] = detail::json_vector(r.omega);
  j["lambda"] = detail::json_vector(r.lambda);
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& s : r.kappa_history) hist.push_back({{"l", s.l}, {"kappa", detail::json_number(s.kappa)}});
  j["kappa_history"] = hist;
  if (r.e_omega) j["e_omega"] = detail::json_number(*r.e_omega);
  return j;
}

inline RecoveryReport report_from_json(const nlohmann::json& j) {
  RecoveryReport r;
  r.method = j.value("method", std::string("recovery-matrix"));
  const auto status = j.at("status").get<std::string>();
  if (status == "recovered") {
    r.status = RecoveryStatus::Recovered;
  } else if (status == "insufficient_observations") {
    r.status = RecoveryStatus::InsufficientObservations;
  } else if (status == "degenerate") {
    r.status = RecoveryStatus::Degenerate;
  } else {
    throw std::invalid_argument("unknown report status '" + status + "'");
  }
  r.t = j.at("t").get<int>();
  r.l_min = j.at("l_min").get<int>();
  r.omega = detail::vector_from_json(j.at("omega"));
  r.lambda = detail::vector_from_json(j.at("lambda"));
  for (const auto& s : j.at("kappa_history")) {
    r.kappa_history.push_back({s.at("l").get<int>(), detail::number_from_json(s.at("kappa"))});
  }
  if (j.contains("e_omega")) r.e_omega = detail::number_from_json(j.at("e_omega"));
  return r;
}

/// `l,kappa` rows for plotting.
inline void write_kappa_csv(std::ostream& os, const std::vector<KappaSample>& history) {
  os << "l,kappa\n" << std::setprecision(17);
  for (const auto& s : history) os << s.l << ',' << s.kappa << '\n';
}

}  // namespace rmioc
