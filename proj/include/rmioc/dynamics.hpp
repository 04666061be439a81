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

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "rmioc/finite_difference.hpp"
#include "rmioc/types.hpp"

namespace rmioc {

struct DiscreteTime {};
struct ContinuousTime {};

/// A state map g(x, u) with Jacobians dg/dx (n x n) and dg/du (n x m).
///
/// For `DiscreteTime` the map is the successor state x_{k+1} = f(x_k, u_{k+1});
/// for `ContinuousTime` it is the vector field xdot = f(x, u). Instances are
/// immutable and safe to evaluate concurrently.
template <class TimeDomain>
class BasicSystem {
 public:
  using MapFn = std::function<Vector(const Vector&, const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&, const Vector&)>;

  BasicSystem(int state_dim, int input_dim, MapFn map, JacobianFn state_jacobian,
              JacobianFn input_jacobian, std::string name = "custom")
      : impl_(std::make_shared<const Impl>(Impl{state_dim, input_dim, std::move(map),
                                                std::move(state_jacobian),
                                                std::move(input_jacobian),
                                                std::move(name)})) {
    detail::require_dims(state_dim >= 1 && input_dim >= 1,
                         "system dimensions must be positive");
  }

  int state_dim() const { return impl_->n; }
  int input_dim() const { return impl_->m; }
  const std::string& name() const { return impl_->name; }

  Vector operator()(const Vector& x, const Vector& u) const {
    check(x, u);
    return impl_->map(x, u);
  }

  Matrix state_jacobian(const Vector& x, const Vector& u) const {
    check(x, u);
    return impl_->dx(x, u);
  }

  Matrix input_jacobian(const Vector& x, const Vector& u) const {
    check(x, u);
    return impl_->du(x, u);
  }

 private:
  struct Impl {
    int n;
    int m;
    MapFn map;
    JacobianFn dx;
    JacobianFn du;
    std::string name;
  };

  void check(const Vector& x, const Vector& u) const {
    detail::require_dims(x.size() == impl_->n && u.size() == impl_->m,
                         "system '" + impl_->name + "' expects x in R^" +
                             std::to_string(impl_->n) + " and u in R^" +
                             std::to_string(impl_->m) + ", got " +
                             std::to_string(x.size()) + " and " + std::to_string(u.size()));
  }

  std::shared_ptr<const Impl> impl_;
};

using DynamicalSystem = BasicSystem<DiscreteTime>;
using ContinuousSystem = BasicSystem<ContinuousTime>;

/// x_{k+1} = A x_k + B u_{k+1}.
inline DynamicalSystem lti_system(const Matrix& A, const Matrix& B) {
  detail::require_dims(A.rows() == A.cols() && A.rows() >= 1,
                       "A must be square, got " + detail::shape(A));
  detail::require_dims(B.rows() == A.rows() && B.cols() >= 1,
                       "B must have " + std::to_string(A.rows()) + " rows, got " +
                           detail::shape(B));
  return DynamicalSystem(
      static_cast<int>(A.rows()), static_cast<int>(B.cols()),
      [A, B](const Vector& x, const Vector& u) -> Vector { return A * x + B * u; },
      [A](const Vector&, const Vector&) -> Matrix { return A; },
      [B](const Vector&, const Vector&) -> Matrix { return B; }, "lti");
}

/// Forward-Euler discretization f_d(x, u) = x + dt * f_c(x, u).
inline DynamicalSystem discretize_euler(const ContinuousSystem& sys, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize_euler: dt must be positive");
  const int n = sys.state_dim();
  return DynamicalSystem(
      n, sys.input_dim(),
      [sys, dt](const Vector& x, const Vector& u) -> Vector { return x + dt * sys(x, u); },
      [sys, dt, n](const Vector& x, const Vector& u) -> Matrix {
        return Matrix::Identity(n, n) + dt * sys.state_jacobian(x, u);
      },
      [sys, dt](const Vector& x, const Vector& u) -> Matrix {
        return dt * sys.input_jacobian(x, u);
      },
      sys.name() + "-euler");
}

/// Replaces the Jacobians of `sys` with central differences of its map.
template <class TimeDomain>
BasicSystem<TimeDomain> with_finite_difference_jacobians(const BasicSystem<TimeDomain>& sys,
                                                         double rel_step = kDefaultRelativeStep) {
  return BasicSystem<TimeDomain>(
      sys.state_dim(), sys.input_dim(),
      [sys](const Vector& x, const Vector& u) -> Vector { return sys(x, u); },
      [sys, rel_step](const Vector& x, const Vector& u) -> Matrix {
        return central_difference_jacobian([&](const Vector& xx) { return sys(xx, u); }, x,
                                           rel_step);
      },
      [sys, rel_step](const Vector& x, const Vector& u) -> Matrix {
        return central_difference_jacobian([&](const Vector& uu) { return sys(x, uu); }, u,
                                           rel_step);
      },
      sys.name() + "-fd");
}

}  // namespace rmioc
