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

#include <concepts>
#include <limits>
#include <optional>
#include <stdexcept>

#include "rmioc/recovery.hpp"
#include "rmioc/report.hpp"

namespace rmioc {

/// An observation source yields the observation at time k, or nullopt when the
/// stream has ended.
template <class Source>
concept ObservationSource = requires(Source& s, int k) {
  { s(k) } -> std::convertible_to<std::optional<Observation>>;
};

/// Observations drawn from a stored trajectory, stopping after `last` (inclusive).
class TrajectorySource {
 public:
  TrajectorySource(const Trajectory& traj, const DynamicalSystem& sys, const FeatureSet& features,
                   int last)
      : traj_(&traj), sys_(&sys), features_(&features), last_(last) {}

  TrajectorySource(const Trajectory& traj, const DynamicalSystem& sys, const FeatureSet& features)
      : TrajectorySource(traj, sys, features, traj.horizon()) {}

  std::optional<Observation> operator()(int k) const {
    if (k < 1 || k > last_) return std::nullopt;
    return observe(*traj_, k, *sys_, *features_);
  }

 private:
  const Trajectory* traj_;
  const DynamicalSystem* sys_;
  const FeatureSet* features_;
  int last_;
};

/// How H(t, l) is carried between lengths: as its triangular factor (constant
/// cost per step) or as the full matrix.
enum class Assembly { Factored, Full };

struct MinimalObservationOptions {
  double gamma = 100.0;
  int l_cap = std::numeric_limits<int>::max();  // give up after this many observations
  Assembly assembly = Assembly::Factored;
};

class StreamExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class State, class Source>
RecoveryReport grow_until_rank(State& state, Source& source, const MinimalObservationOptions& opts) {
  const int t = state.start();
  const int r = state.feature_count();
  const int n = state.state_dim();
  const int m = state.input_dim();
  const bool open_ended = opts.l_cap == std::numeric_limits<int>::max();

  RecoveryReport report;
  report.t = t;
  while (true) {
    const int l = state.length();
    const Matrix h_bar = normalize(state);
    const RankDiagnostics diag = rank_index(h_bar);
    report.kappa_history.push_back({l, diag.kappa});
    if (rank_test(diag, l, r, n, m, opts.gamma)) {
      const WeightEstimate est = recover_weights(h_bar, r, n);
      report.status = RecoveryStatus::Recovered;
      report.l_min = l;
      report.omega = est.omega;
      report.lambda = est.lambda;
      return report;
    }
    if (l >= opts.l_cap) break;
    auto next = source(t + l);
    if (!next) {
      if (open_ended) break;
      throw StreamExhausted("observation stream ended at k=" + std::to_string(t + l - 1) +
                            " before the cap of " + std::to_string(opts.l_cap) + " observations");
    }
    state.extend(*next);
  }
  report.status = RecoveryStatus::InsufficientObservations;
  report.l_min = state.length();
  return report;
}

}  // namespace detail

/// Grows the window from t one observation at a time until the rank test passes
/// for the first time, then recovers the weights from H(t, l_min).
///
/// If `l_cap` observations do not suffice the report is flagged
/// InsufficientObservations and carries the rank-index history. Throws
/// StreamExhausted when the source ends before `l_cap` is reached (an infinite
/// cap accepts the end of the stream as the cap).
template <ObservationSource Source>
RecoveryReport minimal_observation_ioc(Source&& source, int t,
                                       const MinimalObservationOptions& opts) {
  if (!(opts.gamma > 1.0)) throw std::invalid_argument("minimal_observation_ioc: gamma must exceed 1");
  if (opts.l_cap < 1) throw std::invalid_argument("minimal_observation_ioc: l_cap must be positive");

  auto first = source(t);
  if (!first) throw StreamExhausted("no observation at the start time " + std::to_string(t));
  if (opts.assembly == Assembly::Full) {
    RecoveryState state = init_recovery(t, *first);
    return detail::grow_until_rank(state, source, opts);
  }
  RecoveryFactor factor(t, *first);
  return detail::grow_until_rank(factor, source, opts);
}

}  // namespace rmioc
