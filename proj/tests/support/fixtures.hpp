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

#include <random>
#include <vector>

#include "rmioc/harness.hpp"

namespace rmioc::testing {

struct LqrFixture {
  LqrProblem problem = reference_lqr_problem(reference_lqr_weights());
  Trajectory trajectory = solve_lqr(problem);
  DynamicalSystem system = lti_system(problem.A, problem.B);
  FeatureSet features = quadratic_feature_library(2, 1, std::vector<std::string>{"x1^2", "x2^2", "u1^2"});
  Vector weights = reference_lqr_weights();
};

inline const LqrFixture& lqr() {
  static const LqrFixture f;
  return f;
}

struct ArmFixture {
  ArmTask task = ArmTask::desk_scale();
  TranscriptionResult solution = solve_arm_task(task);
  DynamicalSystem system = task.system();
  FeatureSet features = task.feature_set();
};

/// Desk-scale reach solved once per process.
inline const ArmFixture& arm() {
  static const ArmFixture f;
  return f;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index size, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = dist(rng);
  return v;
}

}  // namespace rmioc::testing
