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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmioc/dynamics.hpp"
#include "rmioc/types.hpp"

namespace rmioc {

/// States x_0..x_T and inputs u_1..u_T, with x_{k+1} = f(x_k, u_{k+1}).
/// Time indices in the accessors are the mathematical ones (inputs are 1-based).
class Trajectory {
 public:
  Trajectory() = default;

  Trajectory(std::vector<Vector> states, std::vector<Vector> inputs)
      : states_(std::move(states)), inputs_(std::move(inputs)) {
    validate();
  }

  /// All-zero trajectory of horizon T.
  static Trajectory zeros(int horizon, int state_dim, int input_dim) {
    return Trajectory(std::vector<Vector>(static_cast<std::size_t>(horizon) + 1,
                                          Vector::Zero(state_dim)),
                      std::vector<Vector>(static_cast<std::size_t>(horizon),
                                          Vector::Zero(input_dim)));
  }

  int horizon() const { return static_cast<int>(inputs_.size()); }
  int state_dim() const { return states_.empty() ? 0 : static_cast<int>(states_.front().size()); }
  int input_dim() const { return inputs_.empty() ? 0 : static_cast<int>(inputs_.front().size()); }

  /// x_k for 0 <= k <= T.
  const Vector& x(int k) const { return states_.at(checked(k, 0, horizon(), "state")); }
  Vector& x(int k) { return states_.at(checked(k, 0, horizon(), "state")); }

  /// u_k for 1 <= k <= T.
  const Vector& u(int k) const { return inputs_.at(checked(k, 1, horizon(), "input") - 1); }
  Vector& u(int k) { return inputs_.at(checked(k, 1, horizon(), "input") - 1); }

  const std::vector<Vector>& states() const { return states_; }
  const std::vector<Vector>& inputs() const { return inputs_; }

  void validate() const {
    if (inputs_.empty()) throw std::invalid_argument("trajectory horizon must be at least 1");
    if (states_.size() != inputs_.size() + 1) {
      throw std::invalid_argument("trajectory needs T+1 states for T inputs");
    }
    const auto n = states_.front().size();
    const auto m = inputs_.front().size();
    if (n == 0 || m == 0) throw DimensionError("trajectory vectors must be non-empty");
    for (const auto& s : states_) detail::require_dims(s.size() == n, "ragged trajectory states");
    for (const auto& a : inputs_) detail::require_dims(a.size() == m, "ragged trajectory inputs");
  }

 private:
  static std::size_t checked(int k, int lo, int hi, const char* what) {
    if (k < lo || k > hi) {
      throw std::out_of_range(std::string("trajectory ") + what + " index " + std::to_string(k) +
                              " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<std::size_t>(k);
  }

  std::vector<Vector> states_;
  std::vector<Vector> inputs_;
};

/// max_k || x_{k+1} - f(x_k, u_{k+1}) ||_inf.
inline double dynamics_violation(const Trajectory& traj, const DynamicalSystem& sys) {
  double worst = 0.0;
  for (int k = 0; k < traj.horizon(); ++k) {
    worst = std::max(worst, (traj.x(k + 1) - sys(traj.x(k), traj.u(k + 1))).cwiseAbs().maxCoeff());
  }
  return worst;
}

inline bool dynamically_consistent(const Trajectory& traj, const DynamicalSystem& sys,
                                   double tol = 1e-8) {
  return dynamics_violation(traj, sys) < tol;
}

namespace detail {

// from_chars accepts subnormals, which strtod-based parsing reports as range errors.
inline double parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  if (first < last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error("cannot parse number '" + text + "'");
  }
  return value;
}

}  // namespace detail

/// CSV with header `k,x1..xn,u1..um`; the k=0 row leaves the input fields empty.
/// Values are written with 17 significant digits so the file round-trips exactly.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int n = traj.state_dim();
  const int m = traj.input_dim();
  os << "k";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= m; ++i) os << ",u" << i;
  os << '\n';
  os << std::setprecision(17);
  for (int k = 0; k <= traj.horizon(); ++k) {
    os << k;
    for (int i = 0; i < n; ++i) os << ',' << traj.x(k)[i];
    for (int i = 0; i < m; ++i) {
      os << ',';
      if (k > 0) os << traj.u(k)[i];
    }
    os << '\n';
  }
}

inline Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trajectory CSV: missing header");
  int n = 0;
  int m = 0;
  {
    std::stringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    if (cell != "k") throw std::runtime_error("trajectory CSV: header must start with 'k'");
    while (std::getline(header, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      if (cell.rfind('x', 0) == 0) {
        ++n;
      } else if (cell.rfind('u', 0) == 0) {
        ++m;
      } else {
        throw std::runtime_error("trajectory CSV: unexpected column '" + cell + "'");
      }
    }
  }
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (static_cast<int>(cells.size()) != 1 + n + m) {
      throw std::runtime_error("trajectory CSV: row has " + std::to_string(cells.size()) +
                               " fields, expected " + std::to_string(1 + n + m));
    }
    const int k = std::stoi(cells[0]);
    if (k != static_cast<int>(states.size())) {
      throw std::runtime_error("trajectory CSV: rows must be ordered k = 0, 1, ...");
    }
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = detail::parse_double(cells[static_cast<std::size_t>(1 + i)]);
    states.push_back(x);
    if (k > 0) {
      Vector u(m);
      for (int i = 0; i < m; ++i) u[i] = detail::parse_double(cells[static_cast<std::size_t>(1 + n + i)]);
      inputs.push_back(u);
    }
  }
  return Trajectory(std::move(states), std::move(inputs));
}

inline void save_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_trajectory_csv(os, traj);
}

inline Trajectory load_trajectory_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_trajectory_csv(is);
}

}  // namespace rmioc
