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

#include <stdexcept>
#include <vector>

#include "rmioc/dynamics.hpp"
#include "rmioc/trajectory.hpp"

namespace rmioc {

/// min sum_{k=1}^T x_k' Q x_k + u_k' R u_k  s.t.  x_{k+1} = A x_k + B u_{k+1}, x_0 given.
struct LqrProblem {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  Vector x0;
  int T = 1;

  void validate() const {
    const auto n = A.rows();
    detail::require_dims(A.cols() == n && n >= 1, "LqrProblem: A must be square");
    detail::require_dims(B.rows() == n && B.cols() >= 1, "LqrProblem: B must have n rows");
    detail::require_dims(Q.rows() == n && Q.cols() == n, "LqrProblem: Q must be n x n");
    detail::require_dims(R.rows() == B.cols() && R.cols() == B.cols(), "LqrProblem: R must be m x m");
    detail::require_dims(x0.size() == n, "LqrProblem: x0 must be in R^n");
    if (T < 1) throw std::invalid_argument("LqrProblem: horizon must be at least 1");
    const double sym_tol = 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff() + R.cwiseAbs().maxCoeff());
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > sym_tol ||
        (R - R.transpose()).cwiseAbs().maxCoeff() > sym_tol) {
      throw std::invalid_argument("LqrProblem: Q and R must be symmetric");
    }
    if (Eigen::LLT<Matrix>(R).info() != Eigen::Success) {
      throw std::invalid_argument("LqrProblem: R must be positive definite");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -sym_tol) {
      throw std::invalid_argument("LqrProblem: Q must be positive semidefinite");
    }
  }
};

struct LqrSolution {
  Trajectory trajectory;
  std::vector<Matrix> gains;  // gains[k] maps x_k to u_{k+1} = -gains[k] x_k, k = 0..T-1
};

/// Backward Riccati recursion for the stage cost paid at the successor state.
///
/// With P_k the cost-to-go matrix from x_k (P_T = 0) and S_k = Q + P_k:
///   K_k     = (R + B' S_{k+1} B)^{-1} B' S_{k+1} A
///   P_k     = A' S_{k+1} A - A' S_{k+1} B K_k
///   u_{k+1} = -K_k x_k
inline LqrSolution solve_lqr_with_gains(const LqrProblem& p) {
  p.validate();
  const auto n = p.A.rows();
  std::vector<Matrix> gains(static_cast<std::size_t>(p.T));
  Matrix P = Matrix::Zero(n, n);
  for (int k = p.T - 1; k >= 0; --k) {
    const Matrix S = p.Q + P;
    const Matrix BtS = p.B.transpose() * S;
    const Matrix gram = p.R + BtS * p.B;
    const Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalError("solve_lqr: R + B'SB not positive definite");
    Matrix K = llt.solve(BtS * p.A);
    Matrix next = p.A.transpose() * S * p.A - (BtS * p.A).transpose() * K;
    P = 0.5 * (next + next.transpose());
    gains[static_cast<std::size_t>(k)] = std::move(K);
  }
  std::vector<Vector> states{p.x0};
  std::vector<Vector> inputs;
  for (int k = 0; k < p.T; ++k) {
    const Vector& x = states.back();
    Vector u = -gains[static_cast<std::size_t>(k)] * x;
    states.push_back(p.A * x + p.B * u);
    inputs.push_back(std::move(u));
  }
  return {Trajectory(std::move(states), std::move(inputs)), std::move(gains)};
}

inline Trajectory solve_lqr(const LqrProblem& p) { return solve_lqr_with_gains(p).trajectory; }

/// The inverse-LQR instance: x_{k+1} = [-1 1; 0 1] x_k + [1; 3] u_{k+1},
/// x_0 = [2, -2], T = 100, Q = diag(q1, q2), R = r.
inline LqrProblem reference_lqr_problem(const Vector& weights, int T = 100) {
  detail::require_dims(weights.size() == 3, "LQR instance takes weights [q1, q2, r]");
  LqrProblem p;
  p.A = Matrix{{-1.0, 1.0}, {0.0, 1.0}};
  p.B = Matrix{{1.0}, {3.0}};
  p.Q = Matrix{{weights[0], 0.0}, {0.0, weights[1]}};
  p.R = Matrix{{weights[2]}};
  p.x0 = Vector{{2.0, -2.0}};
  p.T = T;
  return p;
}

inline Vector reference_lqr_weights() { return Vector{{0.507, 0.845, 0.169}}; }

}  // namespace rmioc
