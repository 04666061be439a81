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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rmioc/arm.hpp"
#include "rmioc/kkt_baseline.hpp"
#include "rmioc/lqr.hpp"
#include "rmioc/minimal_observation.hpp"
#include "rmioc/transcription.hpp"

namespace rmioc {

// ---------------------------------------------------------------------------
// Seeds

/// splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based child seed: the same (root, path) always yields the same seed,
/// and sibling paths give unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root);
  for (const std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

/// Stream identifiers used with derive_seed.
namespace seed_stream {
inline constexpr std::uint64_t kNoise = 1;
}

// ---------------------------------------------------------------------------
// Configuration

enum class SystemKind { Lqr, Arm };

inline std::string to_string(SystemKind k) { return k == SystemKind::Lqr ? "lqr" : "arm"; }

inline SystemKind system_kind_from_string(const std::string& s) {
  if (s == "lqr") return SystemKind::Lqr;
  if (s == "arm") return SystemKind::Arm;
  throw std::invalid_argument("unknown system '" + s + "' (expected lqr or arm)");
}

struct ExperimentConfig {
  std::string experiment = "arm";
  SystemKind system = SystemKind::Arm;
  ArmParameters params;
  double dt = 1.0 / 200.0;
  int T = 200;
  std::vector<std::string> features = {"u1^2", "u2^2"};  // generating cost
  Vector weights = Vector{{0.6, 0.4}};
  Vector x_start = Vector::Zero(4);
  Vector x_goal = Vector{{std::numbers::pi / 2.0, 0.0, -std::numbers::pi / 2.0, 0.0}};
  Vector lqr_x0 = Vector{{2.0, -2.0}};
  std::vector<std::string> candidates;  // recovery feature set; empty = generating set
  std::vector<double> sigmas = {0.0};
  double gamma = 100.0;
  std::vector<double> gammas = {10.0, 30.0, 100.0, 300.0, 600.0};
  std::vector<int> starts;  // empty = every admissible start
  std::vector<int> feature_counts = {2, 3, 4, 5, 6};
  int trials = 1;
  std::uint64_t seed = 20260101;
  int threads = 1;
  std::string out = "out";

  static ExperimentConfig arm(bool paper_scale = false) {
    ExperimentConfig c;
    c.candidates = {"u1^2", "u2^2", "u1^3", "u2^3", "u1^4", "u2^4"};
    if (paper_scale) c.scale_to_full();
    return c;
  }

  static ExperimentConfig lqr() {
    ExperimentConfig c;
    c.experiment = "lqr";
    c.system = SystemKind::Lqr;
    c.T = 100;
    c.dt = 1.0;
    c.features = {"x1^2", "x2^2", "u1^2"};
    c.weights = reference_lqr_weights();
    c.starts = {1, 3, 6, 54, 84};
    return c;
  }

  void scale_to_full() {
    T = 2000;
    dt = 1.0 / 2000.0;
  }

  int state_dim() const { return system == SystemKind::Lqr ? 2 : 4; }
  int input_dim() const { return system == SystemKind::Lqr ? 1 : 2; }

  const std::vector<std::string>& recovery_features() const {
    return candidates.empty() ? features : candidates;
  }

  /// Ground-truth weights over `names`: generating weights where the name is
  /// part of the generating cost, zero elsewhere.
  Vector truth_for(const std::vector<std::string>& names) const {
    Vector w = Vector::Zero(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t j = 0; j < features.size(); ++j) {
        if (Monomial::parse(names[i]).to_string() == Monomial::parse(features[j]).to_string()) {
          w[static_cast<Eigen::Index>(i)] = weights[static_cast<Eigen::Index>(j)];
        }
      }
    }
    return w;
  }

  void validate() const {
    if (T < 2) throw std::invalid_argument("config: T must be at least 2");
    if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be positive");
    if (static_cast<std::size_t>(weights.size()) != features.size()) {
      throw std::invalid_argument("config: one weight per generating feature");
    }
    if (!(gamma > 1.0)) throw std::invalid_argument("config: gamma must exceed 1");
    for (double g : gammas) {
      if (!(g > 1.0)) throw std::invalid_argument("config: every gamma must exceed 1");
    }
    for (double s : sigmas) {
      if (!(s >= 0.0)) throw std::invalid_argument("config: sigma must be nonnegative");
    }
    if (trials < 1) throw std::invalid_argument("config: trials must be positive");
    if (threads < 1) throw std::invalid_argument("config: threads must be positive");
    if (system == SystemKind::Arm) {
      params.validate();
      detail::require_dims(x_start.size() == 4 && x_goal.size() == 4, "config: arm endpoints are in R^4");
    } else {
      detail::require_dims(lqr_x0.size() == 2, "config: LQR x0 is in R^2");
    }
  }
};

namespace detail {

inline std::vector<double> doubles_from_json(const nlohmann::json& j) { return j.get<std::vector<double>>(); }

inline Vector eigen_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace detail

/// Missing keys keep the defaults of the named system.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  const SystemKind kind = system_kind_from_string(j.value("system", std::string("arm")));
  ExperimentConfig c = kind == SystemKind::Lqr ? ExperimentConfig::lqr() : ExperimentConfig::arm();
  if (j.value("paper_scale", false)) c.scale_to_full();
  c.experiment = j.value("experiment", c.experiment);
  c.dt = j.value("dt", c.dt);
  c.T = j.value("T", c.T);
  if (j.contains("features")) c.features = j.at("features").get<std::vector<std::string>>();
  if (j.contains("weights")) c.weights = detail::eigen_from_json(j.at("weights"));
  if (j.contains("x_start")) c.x_start = detail::eigen_from_json(j.at("x_start"));
  if (j.contains("x_goal")) c.x_goal = detail::eigen_from_json(j.at("x_goal"));
  if (j.contains("x0")) c.lqr_x0 = detail::eigen_from_json(j.at("x0"));
  if (j.contains("candidates")) c.candidates = j.at("candidates").get<std::vector<std::string>>();
  if (j.contains("sigmas")) c.sigmas = detail::doubles_from_json(j.at("sigmas"));
  c.gamma = j.value("gamma", c.gamma);
  if (j.contains("gammas")) c.gammas = detail::doubles_from_json(j.at("gammas"));
  if (j.contains("starts")) c.starts = j.at("starts").get<std::vector<int>>();
  if (j.contains("feature_counts")) c.feature_counts = j.at("feature_counts").get<std::vector<int>>();
  c.trials = j.value("trials", c.trials);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  c.out = j.value("out", c.out);
  if (j.contains("arm")) {
    const auto& a = j.at("arm");
    ArmParameters& p = c.params;
    p.m1 = a.value("m1", p.m1);
    p.m2 = a.value("m2", p.m2);
    p.l1 = a.value("l1", p.l1);
    p.l2 = a.value("l2", p.l2);
    p.r1 = a.value("r1", p.r1);
    p.r2 = a.value("r2", p.r2);
    p.I1 = a.value("I1", p.I1);
    p.I2 = a.value("I2", p.I2);
    p.g = a.value("g", p.g);
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment"] = c.experiment;
  j["system"] = to_string(c.system);
  j["dt"] = c.dt;
  j["T"] = c.T;
  j["features"] = c.features;
  j["weights"] = detail::to_std(c.weights);
  if (c.system == SystemKind::Arm) {
    j["x_start"] = detail::to_std(c.x_start);
    j["x_goal"] = detail::to_std(c.x_goal);
    const ArmParameters& p = c.params;
    j["arm"] = {{"m1", p.m1}, {"m2", p.m2}, {"l1", p.l1}, {"l2", p.l2}, {"r1", p.r1},
                {"r2", p.r2}, {"I1", p.I1}, {"I2", p.I2}, {"g", p.g}};
  } else {
    j["x0"] = detail::to_std(c.lqr_x0);
  }
  j["candidates"] = c.candidates;
  j["sigmas"] = c.sigmas;
  j["gamma"] = c.gamma;
  j["gammas"] = c.gammas;
  j["starts"] = c.starts;
  j["feature_counts"] = c.feature_counts;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out"] = c.out;
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return config_from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------
// Trajectories

inline DynamicalSystem experiment_system(const ExperimentConfig& c) {
  if (c.system == SystemKind::Lqr) {
    const LqrProblem p = reference_lqr_problem(Vector::Ones(3));
    return lti_system(p.A, p.B);
  }
  return discretize_euler(arm_system(c.params), c.dt);
}

inline ArmTask arm_task(const ExperimentConfig& c) {
  ArmTask task;
  task.params = c.params;
  task.dt = c.dt;
  task.T = c.T;
  task.x_start = c.x_start;
  task.x_goal = c.x_goal;
  task.weights = c.weights;
  task.features = c.features;
  return task;
}

/// The noiseless optimal trajectory of the configured system.
inline Trajectory generate_trajectory(const ExperimentConfig& c) {
  c.validate();
  if (c.system == SystemKind::Lqr) {
    const std::vector<std::string> lqr_features = {"x1^2", "x2^2", "u1^2"};
    if (c.features != lqr_features) {
      throw std::invalid_argument("LQR experiments use the features x1^2, x2^2, u1^2");
    }
    LqrProblem p = reference_lqr_problem(c.weights, c.T);
    p.x0 = c.lqr_x0;
    return solve_lqr(p);
  }
  return solve_arm_task(arm_task(c)).trajectory;
}

/// Adds i.i.d. N(0, sigma^2) to the configuration coordinates (theta_1, theta_2)
/// of x_0..x_T and recomputes the torques by discrete inverse dynamics,
///   u_{k+1} = M(theta_k) (theta_dot_{k+1} - theta_dot_k) / dt + C theta_dot_k + g(theta_k),
/// at the noisy states. Joint rates are left as observed.
inline Trajectory inject_noise(const Trajectory& traj, const ArmParameters& p, double sigma,
                               double dt, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("inject_noise: sigma must be nonnegative");
  if (!(dt > 0.0)) throw std::invalid_argument("inject_noise: dt must be positive");
  detail::require_dims(traj.state_dim() == 4 && traj.input_dim() == 2,
                       "inject_noise: expects the arm layout (4 states, 2 inputs)");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> states = traj.states();
  if (sigma > 0.0) {
    for (Vector& x : states) {
      x[arm_index::kTheta1] += sigma * normal(rng);
      x[arm_index::kTheta2] += sigma * normal(rng);
    }
  }
  std::vector<Vector> inputs;
  inputs.reserve(states.size() - 1);
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    const Eigen::Vector2d tau = arm_discrete_inverse_dynamics(p, states[k], states[k + 1], dt);
    inputs.push_back(Vector{{tau[0], tau[1]}});
  }
  return Trajectory(std::move(states), std::move(inputs));
}

// ---------------------------------------------------------------------------
// Start-time sweeps

/// An observed trajectory ready for recovery.
struct Scenario {
  Trajectory trajectory;
  DynamicalSystem system;
  FeatureSet features;
  Vector truth;
  int last = 0;  // last observable time index
};

/// Observation scenario for one noise level and trial. Arm windows end at T-1:
/// x_T is pinned, so the free-terminal costate convention does not apply there.
inline Scenario make_scenario(const ExperimentConfig& c, const Trajectory& clean, double sigma,
                              const std::vector<std::string>& feature_names, int trial = 0,
                              int sigma_index = 0) {
  Scenario s{clean, experiment_system(c),
             quadratic_feature_library(c.state_dim(), c.input_dim(), feature_names),
             c.truth_for(feature_names), clean.horizon()};
  if (c.system == SystemKind::Arm) {
    s.last = clean.horizon() - 1;
    const std::uint64_t seed = derive_seed(
        c.seed, {seed_stream::kNoise, static_cast<std::uint64_t>(sigma_index), static_cast<std::uint64_t>(trial)});
    s.trajectory = inject_noise(clean, c.params, sigma, c.dt, seed);
  } else if (sigma > 0.0) {
    throw std::invalid_argument("noise injection is defined for the arm only");
  }
  return s;
}

struct SweepRecord {
  int start = 0;
  int trial = 0;
  RecoveryStatus status = RecoveryStatus::Recovered;
  int l_min = 0;
  double e_omega = std::numeric_limits<double>::quiet_NaN();
  Vector omega;
  std::vector<KappaSample> kappa_history;
  std::string error;  // set when the run failed outright

  bool recovered() const { return status == RecoveryStatus::Recovered && error.empty(); }
};

struct SweepResult {
  std::vector<SweepRecord> records;  // ordered by (trial, start)
  int recovered = 0;
  double mean_l_min = std::numeric_limits<double>::quiet_NaN();
  double mean_e_omega = std::numeric_limits<double>::quiet_NaN();
};

/// Means over the recovered records; starts near the terminal that run out of
/// observations are reported but not averaged.
inline void aggregate(SweepResult& res) {
  double sum_l = 0.0;
  double sum_e = 0.0;
  int count = 0;
  for (const auto& r : res.records) {
    if (!r.recovered()) continue;
    sum_l += r.l_min;
    sum_e += r.e_omega;
    ++count;
  }
  res.recovered = count;
  if (count > 0) {
    res.mean_l_min = sum_l / count;
    res.mean_e_omega = sum_e / count;
  } else {
    res.mean_l_min = std::numeric_limits<double>::quiet_NaN();
    res.mean_e_omega = std::numeric_limits<double>::quiet_NaN();
  }
}

/// Every start from which the length gate can still be met before `last`.
inline std::vector<int> admissible_starts(const Scenario& s) {
  const int r = s.features.size();
  const int n = s.system.state_dim();
  const int m = s.system.input_dim();
  std::vector<int> starts;
  for (int t = 1; t <= s.last; ++t) {
    if (length_condition(s.last - t + 1, r, n, m)) starts.push_back(t);
  }
  return starts;
}

inline SweepRecord run_single_start(const Scenario& s, int t, double gamma, int trial = 0) {
  SweepRecord rec;
  rec.start = t;
  rec.trial = trial;
  try {
    const MinimalObservationOptions opts{gamma, s.last - t + 1};
    const RecoveryReport rep =
        minimal_observation_ioc(TrajectorySource(s.trajectory, s.system, s.features, s.last), t, opts);
    rec.status = rep.status;
    rec.l_min = rep.l_min;
    rec.kappa_history = rep.kappa_history;
    if (rep.recovered()) {
      rec.omega = rep.omega;
      rec.e_omega = recovery_error(rep.omega, s.truth);
    }
  } catch (const std::exception& e) {
    rec.status = RecoveryStatus::Degenerate;
    rec.error = e.what();
  }
  return rec;
}

/// Runs `job(i)` for i in [0, count) on up to `threads` workers. Each job writes
/// only its own slot, so the outcome does not depend on scheduling.
template <class Job>
void parallel_for(std::size_t count, int threads, Job&& job) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) job(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Minimal-observation recovery from each start in `starts` (all admissible starts when empty).
inline SweepResult run_start_time_sweep(const Scenario& s, double gamma, std::vector<int> starts = {},
                                        int threads = 1, int trial = 0) {
  if (starts.empty()) starts = admissible_starts(s);
  SweepResult res;
  res.records.resize(starts.size());
  parallel_for(starts.size(), threads,
               [&](std::size_t i) { res.records[i] = run_single_start(s, starts[i], gamma, trial); });
  aggregate(res);
  return res;
}

/// Start-time sweep over all trials of one noise level.
inline SweepResult run_start_time_sweep(const ExperimentConfig& c, const Trajectory& clean, double sigma,
                                        int sigma_index, const std::vector<std::string>& feature_names,
                                        double gamma) {
  SweepResult all;
  for (int trial = 0; trial < c.trials; ++trial) {
    const Scenario s = make_scenario(c, clean, sigma, feature_names, trial, sigma_index);
    SweepResult one = run_start_time_sweep(s, gamma, c.starts, c.threads, trial);
    for (auto& r : one.records) all.records.push_back(std::move(r));
  }
  aggregate(all);
  return all;
}

inline SweepResult run_start_time_sweep(const ExperimentConfig& c) {
  const Trajectory clean = generate_trajectory(c);
  return run_start_time_sweep(c, clean, c.sigmas.front(), 0, c.recovery_features(), c.gamma);
}

/// One row of a study: the swept value and the sweep it produced.
struct StudyRow {
  std::string label;
  double value = 0.0;
  SweepResult sweep;
};

/// Start-time sweeps at each noise level, one realisation per level and trial.
inline std::vector<StudyRow> run_noise_sweep(const ExperimentConfig& c, const Trajectory& clean) {
  std::vector<StudyRow> rows;
  for (std::size_t i = 0; i < c.sigmas.size(); ++i) {
    rows.push_back({"sigma", c.sigmas[i],
                    run_start_time_sweep(c, clean, c.sigmas[i], static_cast<int>(i), c.features, c.gamma)});
  }
  return rows;
}

/// Start-time sweeps over nested prefixes of the candidate feature list, at the
/// first configured noise level. The noise realisation is shared by all rows.
inline std::vector<StudyRow> run_feature_sweep(const ExperimentConfig& c, const Trajectory& clean) {
  std::vector<StudyRow> rows;
  const auto& cand = c.recovery_features();
  for (int count : c.feature_counts) {
    if (count < 1 || count > static_cast<int>(cand.size())) {
      throw std::invalid_argument("feature sweep: count " + std::to_string(count) + " out of range");
    }
    const std::vector<std::string> names(cand.begin(), cand.begin() + count);
    rows.push_back({"features", static_cast<double>(count),
                    run_start_time_sweep(c, clean, c.sigmas.front(), 0, names, c.gamma)});
  }
  return rows;
}

/// Start-time sweeps for each threshold with the generating features, on one
/// shared noise realisation.
inline std::vector<StudyRow> run_gamma_sweep(const ExperimentConfig& c, const Trajectory& clean) {
  std::vector<StudyRow> rows;
  for (double g : c.gammas) {
    rows.push_back({"gamma", g, run_start_time_sweep(c, clean, c.sigmas.front(), 0, c.features, g)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Method comparison on fixed windows

struct ComparisonPoint {
  int start = 0;
  int l = 0;
  double e_recovery = std::numeric_limits<double>::quiet_NaN();  // NaN: no sum-normalisable kernel
  double e_kkt = std::numeric_limits<double>::quiet_NaN();       // NaN: l < 2
};

/// e_omega of the recovery-matrix estimate and of the KKT baseline for every
/// window H(t, l) with t in `starts` and t + l - 1 <= last.
inline std::vector<ComparisonPoint> run_lqr_comparison(const Scenario& s, const std::vector<int>& starts) {
  std::vector<ComparisonPoint> table;
  for (int t : starts) {
    if (t < 1 || t > s.last) throw std::invalid_argument("comparison: start " + std::to_string(t) + " out of range");
    const auto obs = observe_window(s.trajectory, t, s.last - t + 1, s.system, s.features);
    RecoveryState state = init_recovery(t, obs.front());
    for (int l = 1; t + l - 1 <= s.last; ++l) {
      if (l > 1) state.extend(obs[static_cast<std::size_t>(l - 1)]);
      ComparisonPoint pt;
      pt.start = t;
      pt.l = l;
      try {
        pt.e_recovery = recovery_error(recover_weights(normalize(state), state.feature_count(), state.state_dim()).omega, s.truth);
      } catch (const NumericalError&) {
      }
      if (l >= 2) {
        const auto window = std::span<const Observation>(obs).first(static_cast<std::size_t>(l));
        pt.e_kkt = recovery_error(kkt_ioc(window).omega, s.truth);
      }
      table.push_back(pt);
    }
  }
  return table;
}

inline std::vector<ComparisonPoint> run_lqr_comparison(const ExperimentConfig& c) {
  const Trajectory clean = generate_trajectory(c);
  const Scenario s = make_scenario(c, clean, 0.0, c.recovery_features());
  return run_lqr_comparison(s, c.starts.empty() ? std::vector<int>{1, 3, 6, 54, 84} : c.starts);
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

/// `start,l_min,e_omega,trial,status`, one row per record.
inline void write_records_csv(std::ostream& os, const SweepResult& res) {
  os << "start,l_min,e_omega,trial,status\n";
  for (const auto& r : res.records) {
    os << r.start << ',' << r.l_min << ',' << detail::format_double(r.e_omega) << ',' << r.trial << ','
       << (r.error.empty() ? to_string(r.status) : "error") << '\n';
  }
}

/// `<label>,records,recovered,mean_l_min,mean_e_omega`, one row per study row.
inline void write_aggregate_csv(std::ostream& os, const std::vector<StudyRow>& rows) {
  os << (rows.empty() ? std::string("value") : rows.front().label)
     << ",records,recovered,mean_l_min,mean_e_omega\n";
  for (const auto& row : rows) {
    os << detail::format_double(row.value) << ',' << row.sweep.records.size() << ',' << row.sweep.recovered << ','
       << detail::format_double(row.sweep.mean_l_min) << ',' << detail::format_double(row.sweep.mean_e_omega)
       << '\n';
  }
}

/// `start,l,e_recovery,e_kkt`.
inline void write_comparison_csv(std::ostream& os, const std::vector<ComparisonPoint>& table) {
  os << "start,l,e_recovery,e_kkt\n";
  for (const auto& p : table) {
    os << p.start << ',' << p.l << ',' << detail::format_double(p.e_recovery) << ','
       << detail::format_double(p.e_kkt) << '\n';
  }
}

/// Mean magnitude of the weights that are zero in `truth`, over recovered records.
inline double mean_irrelevant_magnitude(const SweepResult& res, const Vector& truth) {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : res.records) {
    if (!r.recovered()) continue;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
      if (truth[i] == 0.0) {
        sum += std::abs(r.omega[i]);
        ++count;
      }
    }
  }
  return count > 0 ? sum / count : 0.0;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

template <class Writer>
std::string render(Writer&& w) {
  std::ostringstream os;
  w(os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Checks

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

inline std::vector<CheckResult> check_noise_study(const std::vector<StudyRow>& rows) {
  std::vector<CheckResult> out;
  std::vector<const StudyRow*> noisy;
  for (const auto& row : rows) {
    if (row.value == 0.0) {
      out.push_back({"noiseless mean e_omega < 0.01", row.sweep.mean_e_omega < 0.01,
                     "mean e_omega = " + detail::format_double(row.sweep.mean_e_omega)});
    } else {
      noisy.push_back(&row);
    }
  }
  std::sort(noisy.begin(), noisy.end(), [](auto* a, auto* b) { return a->value < b->value; });
  bool increasing = true;
  bool accurate = true;
  std::string trend;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const auto& sw = noisy[i]->sweep;
    trend += (i ? " | " : "") + detail::format_double(noisy[i]->value) + ": l_min " +
             detail::format_double(sw.mean_l_min) + ", e " + detail::format_double(sw.mean_e_omega);
    if (i > 0 && !(sw.mean_l_min > noisy[i - 1]->sweep.mean_l_min)) increasing = false;
    if (!(sw.mean_e_omega < 0.02)) accurate = false;
  }
  out.push_back({"mean l_min strictly increasing in sigma", increasing, trend});
  out.push_back({"mean e_omega < 0.02 at every sigma", accurate, trend});
  return out;
}

inline std::vector<CheckResult> check_feature_study(const ExperimentConfig& c, const std::vector<StudyRow>& rows) {
  std::vector<CheckResult> out;
  bool increasing = true;
  bool bounded = true;
  bool small_irrelevant = true;
  std::string trend;
  const int n = c.state_dim();
  const int m = c.input_dim();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int count = static_cast<int>(rows[i].value);
    const std::vector<std::string> names(c.recovery_features().begin(), c.recovery_features().begin() + count);
    const Vector truth = c.truth_for(names);
    const double irr = mean_irrelevant_magnitude(rows[i].sweep, truth);
    trend += (i ? " | " : "") + std::to_string(count) + ": l_min " + detail::format_double(rows[i].sweep.mean_l_min) +
             ", |irrelevant| " + detail::format_double(irr);
    if (i > 0 && !(rows[i].sweep.mean_l_min > rows[i - 1].sweep.mean_l_min)) increasing = false;
    if (!(irr < 1e-2)) small_irrelevant = false;
    const int bound = uniform_lower_bound(count, n, m);
    for (const auto& r : rows[i].sweep.records) {
      if (r.recovered() && r.l_min < bound) bounded = false;
    }
  }
  out.push_back({"mean l_min strictly increasing in |F|", increasing, trend});
  out.push_back({"irrelevant weights mean magnitude < 1e-2", small_irrelevant, trend});
  out.push_back({"l_min >= ceil((|F| + n - 1) / m)", bounded, ""});
  return out;
}

inline std::vector<CheckResult> check_gamma_study(const std::vector<StudyRow>& rows) {
  std::vector<CheckResult> out;
  bool nondecreasing = true;
  std::string trend;
  std::optional<double> e100;
  std::optional<double> e600;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& sw = rows[i].sweep;
    trend += (i ? " | " : "") + detail::format_double(rows[i].value) + ": l_min " +
             detail::format_double(sw.mean_l_min) + ", e " + detail::format_double(sw.mean_e_omega);
    if (i > 0 && !(sw.mean_l_min >= rows[i - 1].sweep.mean_l_min)) nondecreasing = false;
    if (rows[i].value == 100.0) e100 = sw.mean_e_omega;
    if (rows[i].value == 600.0) e600 = sw.mean_e_omega;
  }
  out.push_back({"mean l_min nondecreasing in gamma", nondecreasing, trend});
  if (e100 && e600) {
    out.push_back({"mean e_omega at gamma=100 within 2x of gamma=600", *e100 <= 2.0 * *e600,
                   "e(100) = " + detail::format_double(*e100) + ", e(600) = " + detail::format_double(*e600)});
  }
  return out;
}

}  // namespace rmioc
