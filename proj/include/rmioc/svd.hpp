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
#include <numeric>
#include <vector>

#include "rmioc/types.hpp"

namespace rmioc {

/// Singular values and right singular vectors of an a x b matrix, as a map on R^b.
/// values[i] pairs with right.col(i); values are ascending. A wide matrix
/// contributes b - a zero singular values.
struct RightSingularSystem {
  Vector values;
  Matrix right;
};

/// One-sided (Hestenes) Jacobi SVD, applied to the triangular factor of a
/// Householder QR when the matrix is tall.
/// Both stages are backward stable column by column, so right singular vectors
/// of column-graded matrices are resolved to the accuracy of their columns.
inline RightSingularSystem right_singular_system(const Matrix& a, int max_sweeps = 80) {
  const Eigen::Index b = a.cols();
  Matrix w;
  if (a.rows() > b) {
    const Eigen::HouseholderQR<Matrix> qr(a);
    w = qr.matrixQR().topRows(b).triangularView<Eigen::Upper>();
  } else {
    w = a;
  }
  Matrix v = Matrix::Identity(b, b);
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max<Eigen::Index>(w.rows(), 1));

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < b; ++p) {
      for (Eigen::Index q = p + 1; q < b; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          const double x = w(i, p);
          const double y = w(i, q);
          w(i, p) = c * x - s * y;
          w(i, q) = s * x + c * y;
        }
        for (Eigen::Index i = 0; i < b; ++i) {
          const double x = v(i, p);
          const double y = v(i, q);
          v(i, p) = c * x - s * y;
          v(i, q) = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  const Vector norms = w.colwise().norm().transpose();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(b));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return norms[i] < norms[j]; });

  RightSingularSystem out;
  out.values.resize(b);
  out.right.resize(b, b);
  for (Eigen::Index k = 0; k < b; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values[k] = norms[src];
    out.right.col(k) = v.col(src);
  }
  // A wide matrix has at most a.rows() nonzero singular values; the rest are
  // exact zeros even if rounding left residue in the rotated columns.
  if (a.rows() < b) out.values.head(b - a.rows()).setZero();
  return out;
}

}  // namespace rmioc
