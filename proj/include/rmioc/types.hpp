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

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rmioc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when operand shapes disagree with the declared system or feature dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base class for numerical failures (degenerate matrices, non-convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

inline std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace detail
}  // namespace rmioc
