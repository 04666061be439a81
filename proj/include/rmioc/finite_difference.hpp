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
#include <concepts>

#include "rmioc/types.hpp"

namespace rmioc {

inline constexpr double kDefaultRelativeStep = 1e-6;

/// Central-difference Jacobian of a vector-valued map. Coordinate i is
/// perturbed by rel_step * (1 + |x_i|).
template <class Fn>
  requires std::invocable<const Fn&, const Vector&>
Matrix central_difference_jacobian(const Fn& fn, const Vector& x,
                                   double rel_step = kDefaultRelativeStep) {
  const Vector f0 = fn(x);
  Matrix jac(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    const Vector fp = fn(xp);
    xp[i] = x[i] - h;
    const Vector fm = fn(xp);
    xp[i] = x[i];
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

/// max |a - b| / max(1, max |b|). Used to compare analytic and numeric derivatives.
inline double relative_error(const Matrix& a, const Matrix& b) {
  if (b.size() == 0) return 0.0;
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace rmioc
