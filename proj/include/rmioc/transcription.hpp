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
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <json.hpp>

#include "rmioc/arm.hpp"
#include "rmioc/costate.hpp"
#include "rmioc/dynamics.hpp"
#include "rmioc/features.hpp"
#include "rmioc/trajectory.hpp"

namespace rmioc {

/// min sum_{k=1}^T omega' phi(x_k, u_k)  s.t.  x_{k+1} = f(x_k, u_{k+1}),
/// x_0 = x_start, x_T = x_goal.
struct FixedEndpointOcp {
  DynamicalSystem system;
  FeatureSet features;
  Vector weights;
  Vector x_start;
  Vector x_goal;
  int T = 2;

  void validate() const {
    const int n = system.state_dim();
    detail::require_dims(features.state_dim() == n && features.input_dim() == system.input_dim(),
                         "FixedEndpointOcp: feature and system dimensions differ");
    detail::require_dims(weights.size() == features.size(), "FixedEndpointOcp: weight length");
    detail::require_dims(x_start.size() == n && x_goal.size() == n,
                         "FixedEndpointOcp: endpoint dimensions");
    if (T < 2) throw std::invalid_argument("FixedEndpointOcp: horizon must be at least 2");
    if (!weights.allFinite()) throw std::invalid_argument("FixedEndpointOcp: weights must be finite");
  }
};

struct TranscriptionOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;  // on the infinity norm of the KKT residual
  /// Starting point; when absent, states are interpolated linearly between the
  /// endpoints and inputs start at zero.
  std::optional<Trajectory> initial_guess;
  double initial_regularization = 1e-8;
  int max_regularization_attempts = 12;
  double hessian_step = kDefaultRelativeStep;
};

struct IterationRecord {
  int iter = 0;
  double residual = 0.0;  // 2-norm of the KKT residual after the step
  double step_length = 0.0;
};

struct TranscriptionResult {
  Trajectory trajectory;
  Costates costates{std::vector<Vector>{}};   // lambda_1..lambda_T (lambda_T is the endpoint multiplier)
  Vector terminal_costate;
  double residual = 0.0;   // infinity norm at exit
  int iterations = 0;
  std::vector<IterationRecord> log;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::vector<IterationRecord> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<IterationRecord>& trace() const { return trace_; }

 private:
  std::vector<IterationRecord> trace_;
};

/// Line-delimited JSON: {"iter": .., "residual": .., "step_length": ..} per line.
inline void write_solver_log(std::ostream& os, const std::vector<IterationRecord>& log) {
  for (const auto& rec : log) {
    os << nlohmann::json{{"iter", rec.iter}, {"residual", rec.residual},
                         {"step_length", rec.step_length}}
              .dump()
       << '\n';
  }
}

namespace detail {

// Decision vector layout, stage by stage: [u_1, x_1, u_2, x_2, ..., u_{T-1}, x_{T-1}, u_T],
// followed by the multipliers lambda_1..lambda_T of c_k = f(x_{k-1}, u_k) - x_k.
class TranscriptionLayout {
 public:
  TranscriptionLayout(int n, int m, int T) : n_(n), m_(m), T_(T) {}

  Eigen::Index primal_size() const { return static_cast<Eigen::Index>(T_) * m_ + (T_ - 1) * n_; }
  Eigen::Index size() const { return primal_size() + static_cast<Eigen::Index>(T_) * n_; }
  Eigen::Index u(int k) const { return static_cast<Eigen::Index>(k - 1) * (m_ + n_); }
  Eigen::Index x(int k) const { return u(k) + m_; }  // 1 <= k <= T-1
  Eigen::Index lambda(int k) const { return primal_size() + static_cast<Eigen::Index>(k - 1) * n_; }

  int n() const { return n_; }
  int m() const { return m_; }
  int T() const { return T_; }

 private:
  int n_;
  int m_;
  int T_;
};

class TranscriptionProblem {
 public:
  TranscriptionProblem(const FixedEndpointOcp& ocp, double hessian_step)
      : ocp_(ocp),
        layout_(ocp.system.state_dim(), ocp.system.input_dim(), ocp.T),
        hstep_(hessian_step) {}

  const TranscriptionLayout& layout() const { return layout_; }

  Vector state(const Vector& v, int k) const {
    if (k == 0) return ocp_.x_start;
    if (k == layout_.T()) return ocp_.x_goal;
    return v.segment(layout_.x(k), layout_.n());
  }
  Vector input(const Vector& v, int k) const { return v.segment(layout_.u(k), layout_.m()); }
  Vector multiplier(const Vector& v, int k) const {
    return v.segment(layout_.lambda(k), layout_.n());
  }

  Vector residual(const Vector& v) const {
    const int T = layout_.T();
    const int n = layout_.n();
    const int m = layout_.m();
    const auto& sys = ocp_.system;
    const auto& feat = ocp_.features;
    const Vector& w = ocp_.weights;
    Vector F = Vector::Zero(layout_.size());
    for (int k = 1; k <= T; ++k) {
      const Vector xk = state(v, k);
      const Vector xprev = state(v, k - 1);
      const Vector uk = input(v, k);
      const Vector lk = multiplier(v, k);
      F.segment(layout_.u(k), m) = feat.input_jacobian(xk, uk).transpose() * w +
                                   sys.input_jacobian(xprev, uk).transpose() * lk;
      if (k < T) {
        const Vector unext = input(v, k + 1);
        F.segment(layout_.x(k), n) = feat.state_jacobian(xk, uk).transpose() * w - lk +
                                     sys.state_jacobian(xk, unext).transpose() *
                                         multiplier(v, k + 1);
      }
      F.segment(layout_.lambda(k), n) = sys(xprev, uk) - xk;
    }
    return F;
  }

  Eigen::SparseMatrix<double> kkt_matrix(const Vector& v, double regularization) const {
    const int T = layout_.T();
    const int n = layout_.n();
    const int m = layout_.m();
    const auto& sys = ocp_.system;
    const auto& feat = ocp_.features;
    const Vector& w = ocp_.weights;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(T) * static_cast<std::size_t>((n + m) * (n + m) * 3 + 4 * n * (n + m)));

    // Adds a (x, u)-ordered stage Hessian; x_index < 0 marks a pinned state.
    auto add_stage_hessian = [&](const Matrix& hess, Eigen::Index x_index, Eigen::Index u_index) {
      for (int i = 0; i < n + m; ++i) {
        const Eigen::Index gi = i < n ? (x_index < 0 ? -1 : x_index + i) : u_index + (i - n);
        if (gi < 0) continue;
        for (int j = 0; j < n + m; ++j) {
          const Eigen::Index gj = j < n ? (x_index < 0 ? -1 : x_index + j) : u_index + (j - n);
          if (gj < 0 || hess(i, j) == 0.0) continue;
          trip.emplace_back(gi, gj, hess(i, j));
        }
      }
    };
    auto stacked = [n, m](const Vector& x, const Vector& u) {
      Vector z(n + m);
      z << x, u;
      return z;
    };

    for (int k = 1; k <= T; ++k) {
      const Vector xk = state(v, k);
      const Vector xprev = state(v, k - 1);
      const Vector uk = input(v, k);
      const Vector lk = multiplier(v, k);

      // Running cost omega' phi(x_k, u_k).
      const Matrix cost_hess = symmetric_hessian(
          [&](const Vector& z) -> Vector {
            const Vector x = z.head(n);
            const Vector u = z.tail(m);
            Vector g(n + m);
            g << feat.state_jacobian(x, u).transpose() * w, feat.input_jacobian(x, u).transpose() * w;
            return g;
          },
          stacked(xk, uk));
      add_stage_hessian(cost_hess, k < T ? layout_.x(k) : -1, layout_.u(k));

      // Constraint curvature lambda_k' f(x_{k-1}, u_k).
      const Matrix dyn_hess = symmetric_hessian(
          [&](const Vector& z) -> Vector {
            const Vector x = z.head(n);
            const Vector u = z.tail(m);
            Vector g(n + m);
            g << sys.state_jacobian(x, u).transpose() * lk, sys.input_jacobian(x, u).transpose() * lk;
            return g;
          },
          stacked(xprev, uk));
      add_stage_hessian(dyn_hess, k > 1 ? layout_.x(k - 1) : -1, layout_.u(k));

      // Constraint Jacobian rows and their transposes.
      const Eigen::Index row = layout_.lambda(k);
      const Matrix fu = sys.input_jacobian(xprev, uk);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
          if (fu(i, j) == 0.0) continue;
          trip.emplace_back(row + i, layout_.u(k) + j, fu(i, j));
          trip.emplace_back(layout_.u(k) + j, row + i, fu(i, j));
        }
      }
      if (k > 1) {
        const Matrix fx = sys.state_jacobian(xprev, uk);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            if (fx(i, j) == 0.0) continue;
            trip.emplace_back(row + i, layout_.x(k - 1) + j, fx(i, j));
            trip.emplace_back(layout_.x(k - 1) + j, row + i, fx(i, j));
          }
        }
      }
      if (k < T) {
        for (int i = 0; i < n; ++i) {
          trip.emplace_back(row + i, layout_.x(k) + i, -1.0);
          trip.emplace_back(layout_.x(k) + i, row + i, -1.0);
        }
      }
    }
    if (regularization > 0.0) {
      for (Eigen::Index i = 0; i < layout_.primal_size(); ++i) trip.emplace_back(i, i, regularization);
    }
    Eigen::SparseMatrix<double> K(layout_.size(), layout_.size());
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
  }

  Vector pack(const Trajectory& guess) const {
    Vector v = Vector::Zero(layout_.size());
    for (int k = 1; k <= layout_.T(); ++k) {
      v.segment(layout_.u(k), layout_.m()) = guess.u(k);
      if (k < layout_.T()) v.segment(layout_.x(k), layout_.n()) = guess.x(k);
    }
    return v;
  }

  Trajectory unpack(const Vector& v) const {
    std::vector<Vector> states;
    std::vector<Vector> inputs;
    for (int k = 0; k <= layout_.T(); ++k) states.push_back(state(v, k));
    for (int k = 1; k <= layout_.T(); ++k) inputs.push_back(input(v, k));
    return Trajectory(std::move(states), std::move(inputs));
  }

 private:
  template <class Grad>
  Matrix symmetric_hessian(const Grad& grad, const Vector& z) const {
    const Matrix h = central_difference_jacobian(grad, z, hstep_);
    return 0.5 * (h + h.transpose());
  }

  const FixedEndpointOcp& ocp_;
  TranscriptionLayout layout_;
  double hstep_;
};

}  // namespace detail

/// States interpolated linearly between the endpoints, inputs zero.
inline Trajectory linear_interpolation_guess(const FixedEndpointOcp& ocp) {
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  for (int k = 0; k <= ocp.T; ++k) {
    const double s = static_cast<double>(k) / ocp.T;
    states.push_back((1.0 - s) * ocp.x_start + s * ocp.x_goal);
  }
  for (int k = 1; k <= ocp.T; ++k) inputs.push_back(Vector::Zero(ocp.system.input_dim()));
  return Trajectory(std::move(states), std::move(inputs));
}

/// Linear state interpolation with inputs from the arm's discrete inverse dynamics.
inline Trajectory arm_initial_guess(const ArmParameters& p, double dt, const FixedEndpointOcp& ocp) {
  Trajectory guess = linear_interpolation_guess(ocp);
  for (int k = 0; k < ocp.T; ++k) {
    const Eigen::Vector2d tau = arm_discrete_inverse_dynamics(p, guess.x(k), guess.x(k + 1), dt);
    guess.u(k + 1) = Vector{{tau[0], tau[1]}};
  }
  return guess;
}

/// Direct transcription over (x_{1:T-1}, u_{1:T}) solved by Newton iterations on
/// the full KKT system with a backtracking line search on the residual norm.
/// Constraint curvature enters through central differences of the analytic
/// Jacobians. Throws ConvergenceError when the tolerance is not met.
inline TranscriptionResult solve_fixed_endpoint(const FixedEndpointOcp& ocp,
                                                const TranscriptionOptions& opts = {}) {
  ocp.validate();
  const detail::TranscriptionProblem prob(ocp, opts.hessian_step);
  const auto& layout = prob.layout();

  Trajectory guess = opts.initial_guess ? *opts.initial_guess : linear_interpolation_guess(ocp);
  detail::require_dims(guess.horizon() == ocp.T && guess.state_dim() == layout.n() &&
                           guess.input_dim() == layout.m(),
                       "solve_fixed_endpoint: initial guess has the wrong shape");
  Vector v = prob.pack(guess);
  Vector F = prob.residual(v);
  double merit = F.norm();

  std::vector<IterationRecord> log;
  log.push_back({0, merit, 0.0});
  int iter = 0;
  while (F.cwiseAbs().maxCoeff() > opts.tolerance) {
    if (iter >= opts.max_iterations) {
      throw ConvergenceError("solve_fixed_endpoint: no convergence after " +
                                 std::to_string(iter) + " iterations (residual " +
                                 std::to_string(F.cwiseAbs().maxCoeff()) + ")",
                             log);
    }
    ++iter;
    Vector step;
    bool accepted = false;
    double alpha = 1.0;
    Vector trial;
    Vector trial_F;
    for (int attempt = 0; attempt <= opts.max_regularization_attempts && !accepted; ++attempt) {
      const double reg =
          attempt == 0 ? 0.0 : opts.initial_regularization * std::pow(10.0, attempt - 1);
      Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
      lu.compute(prob.kkt_matrix(v, reg));
      if (lu.info() != Eigen::Success) continue;
      step = lu.solve(-F);
      if (lu.info() != Eigen::Success || !step.allFinite()) continue;
      alpha = 1.0;
      while (alpha > 1e-12) {
        trial = v + alpha * step;
        trial_F = prob.residual(trial);
        if (trial_F.allFinite() && trial_F.norm() <= (1.0 - 1e-4 * alpha) * merit) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
    }
    if (!accepted) {
      throw ConvergenceError("solve_fixed_endpoint: singular KKT system or no descent at iteration " +
                                 std::to_string(iter),
                             log);
    }
    v = std::move(trial);
    F = std::move(trial_F);
    merit = F.norm();
    log.push_back({iter, merit, alpha});
  }

  TranscriptionResult res;
  res.trajectory = prob.unpack(v);
  std::vector<Vector> lambda;
  for (int k = 1; k <= ocp.T; ++k) lambda.push_back(prob.multiplier(v, k));
  res.terminal_costate = lambda.back();
  lambda.push_back(Vector::Zero(layout.n()));
  res.costates = Costates(std::move(lambda));
  res.residual = F.cwiseAbs().maxCoeff();
  res.iterations = iter;
  res.log = std::move(log);
  return res;
}

/// The reach task: x_start = 0, x_goal = [pi/2, 0, -pi/2, 0], features
/// {tau1^2, tau2^2} with weights [0.6, 0.4], Euler step dt over horizon T.
struct ArmTask {
  ArmParameters params;
  double dt = 1.0 / 200.0;
  int T = 200;
  Vector x_start = Vector::Zero(4);
  Vector x_goal = Vector{{std::numbers::pi / 2.0, 0.0, -std::numbers::pi / 2.0, 0.0}};
  Vector weights = Vector{{0.6, 0.4}};
  std::vector<std::string> features = {"u1^2", "u2^2"};

  static ArmTask desk_scale() { return {}; }
  static ArmTask full_scale() {
    ArmTask task;
    task.dt = 1.0 / 2000.0;
    task.T = 2000;
    return task;
  }

  DynamicalSystem system() const { return discretize_euler(arm_system(params), dt); }
  FeatureSet feature_set() const { return quadratic_feature_library(4, 2, features); }

  FixedEndpointOcp ocp() const {
    return FixedEndpointOcp{system(), feature_set(), weights, x_start, x_goal, T};
  }
};

inline TranscriptionResult solve_arm_task(const ArmTask& task, TranscriptionOptions opts = {}) {
  const FixedEndpointOcp ocp = task.ocp();
  if (!opts.initial_guess) opts.initial_guess = arm_initial_guess(task.params, task.dt, ocp);
  return solve_fixed_endpoint(ocp, opts);
}

}  // namespace rmioc
