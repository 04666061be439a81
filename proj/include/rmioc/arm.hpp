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
#include <stdexcept>

#include "rmioc/dynamics.hpp"

namespace rmioc {

/// Physical parameters of a planar two-link arm moving in the vertical plane.
/// Defaults are the unit-length, unit-mass arm used throughout the experiments.
struct ArmParameters {
  double m1 = 1.0;  // kg
  double m2 = 1.0;
  double l1 = 1.0;  // m
  double l2 = 1.0;
  double r1 = 0.5;  // joint to centre of mass, m
  double r2 = 0.5;
  double I1 = 0.5;  // kg m^2 about the centre of mass
  double I2 = 0.5;
  double g = 9.81;  // m/s^2

  /// Throws std::invalid_argument unless every parameter is strictly positive.
  /// Gravity may be zero.
  void validate() const {
    if (!(m1 > 0 && m2 > 0 && l1 > 0 && l2 > 0 && r1 > 0 && r2 > 0 && I1 > 0 && I2 > 0 &&
          g >= 0)) {
      throw std::invalid_argument("ArmParameters: physical parameters must be positive");
    }
  }

  double a1() const { return m1 * r1 * r1 + m2 * (l1 * l1 + r2 * r2) + I1 + I2; }
  double a2() const { return m2 * l1 * r2; }
  double a3() const { return m2 * r2 * r2 + I2; }
  double b1() const { return l1 * m2 + r1 * m1; }
  double b2() const { return r2 * m2; }
};

// State layout [theta1, theta1_dot, theta2, theta2_dot], input [tau1, tau2].
namespace arm_index {
inline constexpr int kTheta1 = 0;
inline constexpr int kOmega1 = 1;
inline constexpr int kTheta2 = 2;
inline constexpr int kOmega2 = 3;
}  // namespace arm_index

inline Eigen::Matrix2d arm_mass_matrix(const ArmParameters& p, const Eigen::Vector2d& theta) {
  const double c2 = std::cos(theta[1]);
  Eigen::Matrix2d M;
  M << p.a1() + 2.0 * p.a2() * c2, p.a3() + p.a2() * c2,
       p.a3() + p.a2() * c2,       p.a3();
  return M;
}

inline Eigen::Matrix2d arm_coriolis_matrix(const ArmParameters& p, const Eigen::Vector2d& theta,
                                           const Eigen::Vector2d& theta_dot) {
  const double s2 = std::sin(theta[1]);
  const double a2 = p.a2();
  Eigen::Matrix2d C;
  C << -a2 * theta_dot[1] * s2, -a2 * (theta_dot[0] + theta_dot[1]) * s2,
        a2 * theta_dot[0] * s2,  0.0;
  return C;
}

inline Eigen::Vector2d arm_gravity(const ArmParameters& p, const Eigen::Vector2d& theta) {
  const double c1 = std::cos(theta[0]);
  const double c12 = std::cos(theta[0] + theta[1]);
  return {p.b1() * p.g * c1 + p.b2() * p.g * c12, p.b2() * p.g * c12};
}

/// tau = M(theta) theta_ddot + C(theta, theta_dot) theta_dot + g(theta).
inline Eigen::Vector2d arm_inverse_dynamics(const ArmParameters& p, const Eigen::Vector2d& theta,
                                            const Eigen::Vector2d& theta_dot,
                                            const Eigen::Vector2d& theta_ddot) {
  return arm_mass_matrix(p, theta) * theta_ddot +
         arm_coriolis_matrix(p, theta, theta_dot) * theta_dot + arm_gravity(p, theta);
}

namespace detail {

inline void require_arm_dims(const Vector& x, const Vector& u) {
  require_dims(x.size() == 4 && u.size() == 2, "two-link arm expects x in R^4 and u in R^2");
}

inline Eigen::Vector2d arm_angles(const Vector& x) {
  return {x[arm_index::kTheta1], x[arm_index::kTheta2]};
}

inline Eigen::Vector2d arm_rates(const Vector& x) {
  return {x[arm_index::kOmega1], x[arm_index::kOmega2]};
}

inline Eigen::Vector2d arm_accelerations(const ArmParameters& p, const Vector& x,
                                         const Vector& u) {
  const Eigen::Vector2d theta = arm_angles(x);
  const Eigen::Vector2d rates = arm_rates(x);
  const Eigen::Vector2d bias = arm_coriolis_matrix(p, theta, rates) * rates + arm_gravity(p, theta);
  // M is symmetric positive definite for every configuration.
  return arm_mass_matrix(p, theta).llt().solve(Eigen::Vector2d(u[0], u[1]) - bias);
}

}  // namespace detail

/// xdot = [theta1_dot, theta1_ddot, theta2_dot, theta2_ddot].
inline Vector arm_forward_dynamics(const ArmParameters& p, const Vector& x, const Vector& u) {
  detail::require_arm_dims(x, u);
  const Eigen::Vector2d acc = detail::arm_accelerations(p, x, u);
  Vector xdot(4);
  xdot << x[arm_index::kOmega1], acc[0], x[arm_index::kOmega2], acc[1];
  return xdot;
}

/// Analytic d(xdot)/dx. With h = C theta_dot + g and M depending on theta2 only,
/// d(theta_ddot)/dq = M^{-1} (-dh/dq - dM/dq theta_ddot).
inline Matrix arm_state_jacobian(const ArmParameters& p, const Vector& x, const Vector& u) {
  detail::require_arm_dims(x, u);
  const Eigen::Vector2d theta = detail::arm_angles(x);
  const double w1 = x[arm_index::kOmega1];
  const double w2 = x[arm_index::kOmega2];
  const double s2 = std::sin(theta[1]);
  const double c2 = std::cos(theta[1]);
  const double s1 = std::sin(theta[0]);
  const double s12 = std::sin(theta[0] + theta[1]);
  const double a2 = p.a2();
  const double b1g = p.b1() * p.g;
  const double b2g = p.b2() * p.g;

  const Eigen::Matrix2d M = arm_mass_matrix(p, theta);
  const Eigen::LLT<Eigen::Matrix2d> llt(M);
  const Eigen::Vector2d acc = detail::arm_accelerations(p, x, u);

  Eigen::Matrix2d dM_dtheta2;
  dM_dtheta2 << -2.0 * a2 * s2, -a2 * s2,
                -a2 * s2,        0.0;

  const Eigen::Vector2d dh_dtheta1(-b1g * s1 - b2g * s12, -b2g * s12);
  const Eigen::Vector2d dh_dtheta2(-a2 * c2 * (2.0 * w1 * w2 + w2 * w2) - b2g * s12,
                                   a2 * c2 * w1 * w1 - b2g * s12);
  const Eigen::Vector2d dh_dw1(-2.0 * a2 * s2 * w2, 2.0 * a2 * s2 * w1);
  const Eigen::Vector2d dh_dw2(-2.0 * a2 * s2 * (w1 + w2), 0.0);

  const Eigen::Vector2d dacc_dtheta1 = llt.solve(-dh_dtheta1);
  const Eigen::Vector2d dacc_dtheta2 = llt.solve(-dh_dtheta2 - dM_dtheta2 * acc);
  const Eigen::Vector2d dacc_dw1 = llt.solve(-dh_dw1);
  const Eigen::Vector2d dacc_dw2 = llt.solve(-dh_dw2);

  using namespace arm_index;
  Matrix J = Matrix::Zero(4, 4);
  J(kTheta1, kOmega1) = 1.0;
  J(kTheta2, kOmega2) = 1.0;
  for (int row = 0; row < 2; ++row) {
    const int r = row == 0 ? kOmega1 : kOmega2;
    J(r, kTheta1) = dacc_dtheta1[row];
    J(r, kOmega1) = dacc_dw1[row];
    J(r, kTheta2) = dacc_dtheta2[row];
    J(r, kOmega2) = dacc_dw2[row];
  }
  return J;
}

/// Analytic d(xdot)/du: rows of M^{-1} placed on the acceleration coordinates.
inline Matrix arm_input_jacobian(const ArmParameters& p, const Vector& x, const Vector& u) {
  detail::require_arm_dims(x, u);
  const Eigen::Matrix2d Minv = arm_mass_matrix(p, detail::arm_angles(x)).inverse();
  Matrix J = Matrix::Zero(4, 2);
  J.row(arm_index::kOmega1) = Minv.row(0);
  J.row(arm_index::kOmega2) = Minv.row(1);
  return J;
}

inline ContinuousSystem arm_system(const ArmParameters& p) {
  p.validate();
  return ContinuousSystem(
      4, 2, [p](const Vector& x, const Vector& u) { return arm_forward_dynamics(p, x, u); },
      [p](const Vector& x, const Vector& u) { return arm_state_jacobian(p, x, u); },
      [p](const Vector& x, const Vector& u) { return arm_input_jacobian(p, x, u); }, "arm");
}

/// Torque that realises the Euler step x -> x_next exactly in the velocity
/// coordinates: theta_ddot = (theta_dot_next - theta_dot) / dt, evaluated at x.
inline Eigen::Vector2d arm_discrete_inverse_dynamics(const ArmParameters& p, const Vector& x,
                                                     const Vector& x_next, double dt) {
  const Eigen::Vector2d rates = detail::arm_rates(x);
  const Eigen::Vector2d acc = (detail::arm_rates(x_next) - rates) / dt;
  return arm_inverse_dynamics(p, detail::arm_angles(x), rates, acc);
}

}  // namespace rmioc
