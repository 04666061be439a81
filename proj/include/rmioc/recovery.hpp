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
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rmioc/dynamics.hpp"
#include "rmioc/features.hpp"
#include "rmioc/svd.hpp"
#include "rmioc/trajectory.hpp"
#include "rmioc/types.hpp"

namespace rmioc {

/// The recovery matrix is identically zero, so it cannot be normalised.
class DegenerateRecoveryMatrix : public NumericalError {
 public:
  DegenerateRecoveryMatrix()
      : NumericalError("recovery matrix is the zero matrix (degenerate observation window)") {}
};

/// The smallest right singular vector has (numerically) zero weight sum.
class SumDegenerateKernel : public NumericalError {
 public:
  explicit SumDegenerateKernel(double sum)
      : NumericalError("sum-degenerate kernel: weight part of the kernel direction sums to " +
                       std::to_string(sum)) {}
};

/// Jacobians contributed by the observation (x_k, u_k).
///
/// Under the convention x_{k+1} = f(x_k, u_{k+1}), the input Jacobian belonging to
/// time k is evaluated at (x_{k-1}, u_k) and the state Jacobian at (x_k, u_{k+1}).
/// At the terminal time the state Jacobian is the identity.
struct Observation {
  int k = 0;
  Matrix fx;    // n x n, df/dx_k
  Matrix fu;    // n x m, df/du_k
  Matrix phix;  // r x n, dphi/dx_k
  Matrix phiu;  // r x m, dphi/du_k

  int state_dim() const { return static_cast<int>(fx.rows()); }
  int input_dim() const { return static_cast<int>(fu.cols()); }
  int feature_count() const { return static_cast<int>(phix.rows()); }
};

/// Observation at time k (1 <= k <= T) of a trajectory.
inline Observation observe(const Trajectory& traj, int k, const DynamicalSystem& sys,
                           const FeatureSet& features) {
  const int T = traj.horizon();
  if (k < 1 || k > T) {
    throw std::out_of_range("observation index " + std::to_string(k) + " outside [1, " +
                            std::to_string(T) + "]");
  }
  detail::require_dims(traj.state_dim() == sys.state_dim() && traj.input_dim() == sys.input_dim(),
                       "trajectory and system dimensions differ");
  detail::require_dims(features.state_dim() == sys.state_dim() &&
                           features.input_dim() == sys.input_dim(),
                       "feature set and system dimensions differ");
  Observation obs;
  obs.k = k;
  obs.fx = k < T ? sys.state_jacobian(traj.x(k), traj.u(k + 1))
                 : Matrix::Identity(sys.state_dim(), sys.state_dim());
  obs.fu = sys.input_jacobian(traj.x(k - 1), traj.u(k));
  obs.phix = features.state_jacobian(traj.x(k), traj.u(k));
  obs.phiu = features.input_jacobian(traj.x(k), traj.u(k));
  return obs;
}

/// Observation built from a single (x, u) pair, with every Jacobian evaluated at
/// that point. Exact for systems whose Jacobians do not depend on the point
/// (linear systems); otherwise use `observe` on a trajectory.
inline Observation observe_at(int k, const Vector& x, const Vector& u, const DynamicalSystem& sys,
                              const FeatureSet& features, bool terminal = false) {
  Observation obs;
  obs.k = k;
  obs.fx = terminal ? Matrix::Identity(sys.state_dim(), sys.state_dim())
                    : sys.state_jacobian(x, u);
  obs.fu = sys.input_jacobian(x, u);
  obs.phix = features.state_jacobian(x, u);
  obs.phiu = features.input_jacobian(x, u);
  return obs;
}

/// Observations t, t+1, ..., t+l-1.
inline std::vector<Observation> observe_window(const Trajectory& traj, int t, int l,
                                               const DynamicalSystem& sys,
                                               const FeatureSet& features) {
  if (l < 1) throw std::invalid_argument("observation window must be non-empty");
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(l));
  for (int k = t; k < t + l; ++k) out.push_back(observe(traj, k, sys, features));
  return out;
}

namespace detail {

inline void check_observation(const Observation& o, int n, int m, int r) {
  require_dims(o.fx.rows() == n && o.fx.cols() == n && o.fu.rows() == n && o.fu.cols() == m &&
                   o.phix.rows() == r && o.phix.cols() == n && o.phiu.rows() == r &&
                   o.phiu.cols() == m,
               "observation at k=" + std::to_string(o.k) + " has inconsistent Jacobian shapes");
}

}  // namespace detail

/// The pair (H1, H2) of the recovery matrix H(t, l) = [H1 H2] for the window
/// starting at t of length l. H1 is (m l) x r and H2 is (m l) x n.
///
/// `extend` folds in one more observation using the block product
///   H(t, l+1) = [H1 H2; dphi'/du  df'/du] [I 0; dphi'/dx  df'/dx],
/// so the cost of each step is linear in the current row count.
class RecoveryState {
 public:
  RecoveryState(int t, const Observation& first)
      : t_(t), n_(first.state_dim()), m_(first.input_dim()), r_(first.feature_count()) {
    if (t < 1) throw std::invalid_argument("observation start time is 1-based");
    detail::require_dims(n_ >= 1 && m_ >= 1 && r_ >= 1, "empty observation");
    detail::check_observation(first, n_, m_, r_);
    if (first.k != t) {
      throw std::invalid_argument("first observation is at k=" + std::to_string(first.k) +
                                  ", expected the window start " + std::to_string(t));
    }
    reserve(8);
    append_block(first);
    l_ = 1;
  }

  int start() const { return t_; }
  int length() const { return l_; }
  /// Time index of the most recent observation.
  int end() const { return t_ + l_ - 1; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int feature_count() const { return r_; }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(m_) * l_; }

  auto h1() const { return h1_.topRows(rows()); }
  auto h2() const { return h2_.topRows(rows()); }

  /// [H1 H2] as a dense (m l) x (r + n) matrix.
  Matrix matrix() const {
    Matrix h(rows(), r_ + n_);
    h << h1(), h2();
    return h;
  }

  /// Appends observation t + l.
  void extend(const Observation& next) {
    detail::check_observation(next, n_, m_, r_);
    if (next.k != t_ + l_) {
      throw std::invalid_argument("observation at k=" + std::to_string(next.k) +
                                  " does not continue the window ending at " +
                                  std::to_string(end()));
    }
    const Eigen::Index old_rows = rows();
    if (old_rows + m_ > h1_.rows()) reserve(2 * static_cast<int>(h1_.rows() / m_));
    auto top1 = h1_.topRows(old_rows);
    auto top2 = h2_.topRows(old_rows);
    top1 += top2 * next.phix.transpose();
    top2 = (top2 * next.fx.transpose()).eval();
    append_block(next);
    ++l_;
  }

 private:
  void reserve(int blocks) {
    const Eigen::Index want = static_cast<Eigen::Index>(blocks) * m_;
    if (want <= h1_.rows()) return;
    h1_.conservativeResize(want, r_);
    h2_.conservativeResize(want, n_);
  }

  // Writes the single-observation block [dfu' dphix' + dphiu', dfu' dfx'] at row l_ * m.
  void append_block(const Observation& o) {
    const Eigen::Index row = static_cast<Eigen::Index>(l_) * m_;
    const Matrix fu_t = o.fu.transpose();
    h1_.middleRows(row, m_) = fu_t * o.phix.transpose() + o.phiu.transpose();
    h2_.middleRows(row, m_) = fu_t * o.fx.transpose();
  }

  int t_;
  int n_;
  int m_;
  int r_;
  int l_ = 0;
  Matrix h1_;
  Matrix h2_;
};

/// The triangular factor R of H(t, l) = Q R, carried forward without storing H.
///
/// H(t, l) and R have the same Frobenius norm, singular values and right
/// singular vectors, and the step
///   R(t, l+1) = triangular factor of [R(t, l) T; dphi'/du  df'/du],
///   T = [I 0; dphi'/dx  df'/dx],
/// costs the same at every length.
class RecoveryFactor {
 public:
  RecoveryFactor(int t, const Observation& first)
      : t_(t), n_(first.state_dim()), m_(first.input_dim()), r_(first.feature_count()) {
    if (t < 1) throw std::invalid_argument("observation start time is 1-based");
    detail::require_dims(n_ >= 1 && m_ >= 1 && r_ >= 1, "empty observation");
    detail::check_observation(first, n_, m_, r_);
    if (first.k != t) {
      throw std::invalid_argument("first observation is at k=" + std::to_string(first.k) +
                                  ", expected the window start " + std::to_string(t));
    }
    factor_ = triangular(block(first));
    l_ = 1;
  }

  int start() const { return t_; }
  int length() const { return l_; }
  int end() const { return t_ + l_ - 1; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int feature_count() const { return r_; }

  /// min(m l, r + n) x (r + n), upper triangular.
  const Matrix& matrix() const { return factor_; }

  void extend(const Observation& next) {
    detail::check_observation(next, n_, m_, r_);
    if (next.k != t_ + l_) {
      throw std::invalid_argument("observation at k=" + std::to_string(next.k) +
                                  " does not continue the window ending at " +
                                  std::to_string(end()));
    }
    Matrix stacked(factor_.rows() + m_, r_ + n_);
    stacked.topLeftCorner(factor_.rows(), r_) =
        factor_.leftCols(r_) + factor_.rightCols(n_) * next.phix.transpose();
    stacked.topRightCorner(factor_.rows(), n_) = factor_.rightCols(n_) * next.fx.transpose();
    stacked.bottomRows(m_) = block(next);
    factor_ = triangular(stacked);
    ++l_;
  }

 private:
  Matrix block(const Observation& o) const {
    Matrix b(m_, r_ + n_);
    const Matrix fu_t = o.fu.transpose();
    b << fu_t * o.phix.transpose() + o.phiu.transpose(), fu_t * o.fx.transpose();
    return b;
  }

  Matrix triangular(const Matrix& a) const {
    const Eigen::Index cols = a.cols();
    if (a.rows() <= 1) return a;
    const Eigen::HouseholderQR<Matrix> qr(a);
    const Eigen::Index keep = std::min(a.rows(), cols);
    return qr.matrixQR().topRows(keep).triangularView<Eigen::Upper>();
  }

  int t_;
  int n_;
  int m_;
  int r_;
  int l_ = 0;
  Matrix factor_;
};

/// H(t, 1) from a single observation.
inline RecoveryState init_recovery(int t, const Observation& obs) { return RecoveryState(t, obs); }

inline RecoveryState init_recovery(int t, const Trajectory& traj, const DynamicalSystem& sys,
                                   const FeatureSet& features) {
  return RecoveryState(t, observe(traj, t, sys, features));
}

/// H(t, l+1) from H(t, l) and observation t + l.
[[nodiscard]] inline RecoveryState update_recovery(RecoveryState state, const Observation& next) {
  state.extend(next);
  return state;
}

/// Builds [H1 H2] for a whole window directly from its block definition.
///
/// F_x is unit upper block-bidiagonal, so F_x^{-1} Phi_x and F_x^{-1} V are
/// obtained by block back-substitution from the last observation:
///   Y_last = dphi'/dx_last,  Y_i = dphi'/dx_i + df'/dx_i Y_{i+1}
///   Z_last = df'/dx_last,    Z_i = df'/dx_i Z_{i+1}
/// and block row i of H is [df'/du_i Y_i + dphi'/du_i, df'/du_i Z_i].
inline Matrix build_recovery_matrix(std::span<const Observation> window) {
  if (window.empty()) throw std::invalid_argument("build_recovery_matrix: empty window");
  const int n = window.front().state_dim();
  const int m = window.front().input_dim();
  const int r = window.front().feature_count();
  for (std::size_t i = 0; i < window.size(); ++i) {
    detail::check_observation(window[i], n, m, r);
    if (window[i].k != window.front().k + static_cast<int>(i)) {
      throw std::invalid_argument("build_recovery_matrix: observations must be consecutive");
    }
  }
  const auto l = static_cast<Eigen::Index>(window.size());
  Matrix h(m * l, r + n);
  Matrix y = window.back().phix.transpose();
  Matrix z = window.back().fx.transpose();
  for (Eigen::Index i = l - 1; i >= 0; --i) {
    const Observation& o = window[static_cast<std::size_t>(i)];
    if (i < l - 1) {
      y = (o.phix.transpose() + o.fx.transpose() * y).eval();
      z = (o.fx.transpose() * z).eval();
    }
    const Matrix fu_t = o.fu.transpose();
    h.block(i * m, 0, m, r) = fu_t * y + o.phiu.transpose();
    h.block(i * m, r, m, n) = fu_t * z;
  }
  return h;
}

inline Matrix build_recovery_matrix(const Trajectory& traj, int t, int l,
                                    const DynamicalSystem& sys, const FeatureSet& features) {
  const auto window = observe_window(traj, t, l, sys, features);
  return build_recovery_matrix(std::span<const Observation>(window));
}

/// H / ||H||_F. Throws DegenerateRecoveryMatrix for the zero matrix.
inline Matrix normalize(const Matrix& h) {
  const double norm = h.norm();
  if (!(norm > 0.0)) throw DegenerateRecoveryMatrix();
  return h / norm;
}

inline Matrix normalize(const RecoveryState& state) { return normalize(state.matrix()); }
inline Matrix normalize(const RecoveryFactor& factor) { return normalize(factor.matrix()); }

/// Singular values of a normalised recovery matrix and the rank index
/// kappa = sigma_2 / sigma_1 (two smallest).
struct RankDiagnostics {
  Vector singular_values;  // ascending; one per column (zero-padded for wide matrices)
  double kappa = 1.0;      // +inf when sigma_1 = 0 < sigma_2
  bool length_condition = false;

  double sigma1() const { return singular_values[0]; }
  double sigma2() const { return singular_values[1]; }
};

namespace detail {

// Singular values of h viewed as a map on R^cols, ascending. A wide matrix has
// cols - rows structural zeros, which are included.
inline Vector ascending_singular_values(const Matrix& h) { return right_singular_system(h).values; }

inline double rank_index_from(const Vector& ascending) {
  const double s1 = ascending[0];
  const double s2 = ascending[1];
  if (s1 > 0.0) return s2 / s1;
  // sigma_1 = 0: a one-dimensional kernel gives +inf; a larger kernel gives no
  // separation at all.
  return s2 > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

}  // namespace detail

/// Rank index of a (normalised) recovery matrix. `length_condition` is left false;
/// `diagnose` fills it from the window dimensions.
inline RankDiagnostics rank_index(const Matrix& h_bar) {
  if (h_bar.cols() < 2 || h_bar.rows() < 1) {
    throw std::invalid_argument("rank_index needs a matrix with at least two singular values");
  }
  RankDiagnostics d;
  d.singular_values = detail::ascending_singular_values(h_bar);
  d.kappa = detail::rank_index_from(d.singular_values);
  return d;
}

/// l > (r + n) / m, compared in integers.
inline bool length_condition(int l, int r, int n, int m) {
  return static_cast<long long>(l) * m > static_cast<long long>(r) + n;
}

/// Decision rule: kappa >= gamma and l > (r + n) / m.
inline bool rank_test(const RankDiagnostics& diag, int l, int r, int n, int m, double gamma) {
  if (!(gamma > 1.0)) throw std::invalid_argument("rank_test: gamma must exceed 1");
  return diag.kappa >= gamma && length_condition(l, r, n, m);
}

inline RankDiagnostics diagnose(const RecoveryState& state) {
  RankDiagnostics d = rank_index(normalize(state));
  d.length_condition =
      length_condition(state.length(), state.feature_count(), state.state_dim(), state.input_dim());
  return d;
}

/// Number of singular values above rel_tol * sigma_max.
inline int numerical_rank(const Matrix& h, double rel_tol = 1e-9) {
  if (h.cols() == 0) return 0;
  const Vector s = right_singular_system(h).values;
  const double top = s[s.size() - 1];
  if (top == 0.0) return 0;
  return static_cast<int>((s.array() > rel_tol * top).count());
}

struct WeightEstimate {
  Vector omega;   // r, sums to one
  Vector lambda;  // n, costate beyond the window
};

/// argmin ||H_bar [omega; lambda]|| subject to sum(omega) = 1, via the right
/// singular vector of the smallest singular value rescaled by its weight sum.
inline WeightEstimate recover_weights(const Matrix& h_bar, int r, int n) {
  detail::require_dims(h_bar.cols() == r + n && r >= 1 && n >= 1,
                       "recover_weights: matrix has " + std::to_string(h_bar.cols()) +
                           " columns, expected r + n = " + std::to_string(r + n));
  if (!(h_bar.norm() > 0.0)) throw DegenerateRecoveryMatrix();
  const Vector v = right_singular_system(h_bar).right.col(0);
  const double sum = v.head(r).sum();
  if (std::abs(sum) < 1e-8) throw SumDegenerateKernel(sum);
  WeightEstimate est;
  est.omega = v.head(r) / sum;
  est.lambda = v.tail(n) / sum;
  return est;
}

/// ceil((r + n - 1) / m): no window shorter than this can have rank r + n - 1.
inline int uniform_lower_bound(int r, int n, int m) {
  if (r < 1 || n < 1 || m < 1) throw std::invalid_argument("uniform_lower_bound: r, n, m >= 1");
  return (r + n - 1 + m - 1) / m;
}

/// inf_{c > 0} ||c omega_hat - omega_star|| / ||omega_star||, attained at
/// c* = max(0, <omega_hat, omega_star> / ||omega_hat||^2).
inline double recovery_error(const Vector& omega_hat, const Vector& omega_star) {
  detail::require_dims(omega_hat.size() == omega_star.size(),
                       "recovery_error: weight vectors differ in length");
  const double ref = omega_star.norm();
  if (!(ref > 0.0)) throw std::invalid_argument("recovery_error: ground-truth weights are zero");
  const double hat_sq = omega_hat.squaredNorm();
  if (!(hat_sq > 0.0)) return 1.0;
  const double c = omega_hat.dot(omega_star) / hat_sq;
  if (c <= 0.0) return 1.0;
  return (c * omega_hat - omega_star).norm() / ref;
}

/// ||H [omega; lambda]||_2.
inline double kernel_residual(const Matrix& h, const Vector& omega, const Vector& lambda) {
  detail::require_dims(omega.size() + lambda.size() == h.cols(),
                       "kernel_residual: [omega; lambda] has the wrong length");
  Vector z(h.cols());
  z << omega, lambda;
  return (h * z).norm();
}

inline double kernel_residual(const RecoveryState& state, const Vector& omega,
                              const Vector& lambda) {
  detail::require_dims(omega.size() == state.feature_count() && lambda.size() == state.state_dim(),
                       "kernel_residual: dimension mismatch");
  return (state.h1() * omega + state.h2() * lambda).norm();
}

}  // namespace rmioc
