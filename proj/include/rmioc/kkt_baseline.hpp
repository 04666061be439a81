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

#include <span>
#include <stdexcept>
#include <vector>

#include "rmioc/recovery.hpp"
#include "rmioc/report.hpp"

namespace rmioc {

struct KktIocResult {
  Vector omega;    // sums to one
  Vector lambda;   // lambda_t..lambda_{t+l-1}, stacked
  double residual = 0.0;
  bool degenerate = false;  // least-squares system was rank deficient; minimum-norm solution
};

/// Stacked KKT rows over a window, unknowns [omega; lambda_t; ...; lambda_{t+l-1}]:
///   state rows  -lambda_k + df'/dx_k lambda_{k+1} + dphi'/dx_k omega = 0
///   input rows   df'/du_k lambda_k + dphi'/du_k omega = 0
/// The coupling to lambda_{t+l} in the last state row is dropped, i.e. the
/// window is treated as if it ended the trajectory.
inline Matrix kkt_residual_matrix(std::span<const Observation> window) {
  if (window.empty()) throw std::invalid_argument("kkt_residual_matrix: empty window");
  const int n = window.front().state_dim();
  const int m = window.front().input_dim();
  const int r = window.front().feature_count();
  const auto l = static_cast<Eigen::Index>(window.size());
  Matrix a = Matrix::Zero((n + m) * l, r + n * l);
  for (Eigen::Index i = 0; i < l; ++i) {
    const Observation& o = window[static_cast<std::size_t>(i)];
    detail::check_observation(o, n, m, r);
    if (o.k != window.front().k + static_cast<int>(i)) {
      throw std::invalid_argument("kkt_residual_matrix: observations must be consecutive");
    }
    const Eigen::Index srow = i * n;
    const Eigen::Index urow = n * l + i * m;
    const Eigen::Index lam = r + i * n;
    a.block(srow, 0, n, r) = o.phix.transpose();
    a.block(srow, lam, n, n) = -Matrix::Identity(n, n);
    if (i + 1 < l) a.block(srow, lam + n, n, n) = o.fx.transpose();
    a.block(urow, 0, m, r) = o.phiu.transpose();
    a.block(urow, lam, m, n) = o.fu.transpose();
  }
  return a;
}

/// KKT-residual IOC: least squares over the window's KKT rows subject to
/// sum(omega) = 1, with the constraint eliminated through
/// omega_r = 1 - sum_{i<r} omega_i.
inline KktIocResult kkt_ioc(std::span<const Observation> window) {
  if (window.size() < 2) throw std::invalid_argument("kkt_ioc: window length must be at least 2");
  const int r = window.front().feature_count();
  const Matrix a = kkt_residual_matrix(window);
  const Eigen::Index cols = a.cols();

  // a * [omega; lambda] with omega = E y_w + e_r, E = [I; -1'].
  Matrix reduced(a.rows(), cols - 1);
  const Vector last = a.col(r - 1);
  for (int j = 0; j < r - 1; ++j) reduced.col(j) = a.col(j) - last;
  reduced.rightCols(cols - r) = a.rightCols(cols - r);

  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(reduced);
  const Vector y = cod.solve(-last);

  KktIocResult res;
  res.omega.resize(r);
  res.omega.head(r - 1) = y.head(r - 1);
  res.omega[r - 1] = 1.0 - y.head(r - 1).sum();
  res.lambda = y.tail(cols - r);
  res.residual = (reduced * y + last).norm();
  res.degenerate = cod.rank() < reduced.cols();
  return res;
}

inline KktIocResult kkt_ioc(const Trajectory& traj, int t, int l, const DynamicalSystem& sys,
                            const FeatureSet& features) {
  const auto window = observe_window(traj, t, l, sys, features);
  return kkt_ioc(std::span<const Observation>(window));
}

/// The baseline's estimate in the common report format.
inline RecoveryReport kkt_report(const KktIocResult& res, int t, int l) {
  RecoveryReport rep;
  rep.method = "kkt-baseline";
  rep.status = res.degenerate ? RecoveryStatus::Degenerate : RecoveryStatus::Recovered;
  rep.t = t;
  rep.l_min = l;
  rep.omega = res.omega;
  // The baseline has no costate beyond the window; report the last one inside it.
  rep.lambda = res.lambda.tail(res.lambda.size() / l);
  return rep;
}

}  // namespace rmioc
