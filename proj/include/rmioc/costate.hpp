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
#include <optional>
#include <vector>

#include "rmioc/dynamics.hpp"
#include "rmioc/features.hpp"
#include "rmioc/trajectory.hpp"

namespace rmioc {

/// Costates lambda_1..lambda_{T+1} of a trajectory, with lambda_{T+1} = 0.
class Costates {
 public:
  explicit Costates(std::vector<Vector> values) : values_(std::move(values)) {}

  /// lambda_k for 1 <= k <= T + 1.
  const Vector& operator()(int k) const { return values_.at(static_cast<std::size_t>(k - 1)); }
  int horizon() const { return static_cast<int>(values_.size()) - 1; }

 private:
  std::vector<Vector> values_;
};

/// Backward costate recursion from the state-stationarity rows:
///   lambda_T = dphi'/dx_T omega            (free terminal state), or the given
///                                          terminal multiplier when x_T is pinned
///   lambda_k = df'/dx_k lambda_{k+1} + dphi'/dx_k omega,  k = T-1..1
/// where df/dx_k is evaluated at (x_k, u_{k+1}).
inline Costates compute_costates(const Trajectory& traj, const DynamicalSystem& sys,
                                 const FeatureSet& features, const Vector& omega,
                                 const std::optional<Vector>& terminal_costate = std::nullopt) {
  detail::require_dims(omega.size() == features.size(), "compute_costates: weight length");
  const int T = traj.horizon();
  const int n = sys.state_dim();
  std::vector<Vector> lambda(static_cast<std::size_t>(T) + 1, Vector::Zero(n));
  if (terminal_costate) {
    detail::require_dims(terminal_costate->size() == n, "compute_costates: terminal costate length");
    lambda[static_cast<std::size_t>(T - 1)] = *terminal_costate;
  } else {
    lambda[static_cast<std::size_t>(T - 1)] =
        features.state_jacobian(traj.x(T), traj.u(T)).transpose() * omega;
  }
  for (int k = T - 1; k >= 1; --k) {
    const Matrix fx = sys.state_jacobian(traj.x(k), traj.u(k + 1));
    const Matrix phix = features.state_jacobian(traj.x(k), traj.u(k));
    lambda[static_cast<std::size_t>(k - 1)] =
        fx.transpose() * lambda[static_cast<std::size_t>(k)] + phix.transpose() * omega;
  }
  return Costates(std::move(lambda));
}

/// max_k || df'/du_k lambda_k + dphi'/du_k omega ||_inf over k = 1..T, with
/// df/du_k evaluated at (x_{k-1}, u_k).
inline double stationarity_residual(const Trajectory& traj, const DynamicalSystem& sys,
                                    const FeatureSet& features, const Vector& omega,
                                    const Costates& lambda) {
  double worst = 0.0;
  for (int k = 1; k <= traj.horizon(); ++k) {
    const Matrix fu = sys.input_jacobian(traj.x(k - 1), traj.u(k));
    const Matrix phiu = features.input_jacobian(traj.x(k), traj.u(k));
    const Vector row = fu.transpose() * lambda(k) + phiu.transpose() * omega;
    worst = std::max(worst, row.cwiseAbs().maxCoeff());
  }
  return worst;
}

inline double stationarity_residual(const Trajectory& traj, const DynamicalSystem& sys,
                                    const FeatureSet& features, const Vector& omega,
                                    const std::optional<Vector>& terminal_costate = std::nullopt) {
  return stationarity_residual(traj, sys, features, omega,
                               compute_costates(traj, sys, features, omega, terminal_costate));
}

}  // namespace rmioc
