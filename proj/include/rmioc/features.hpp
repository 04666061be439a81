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
#include <functional>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rmioc/types.hpp"

namespace rmioc {

enum class Variable { State, Input };

/// A coordinate monomial such as x1^2 or u2^3 (coordinates are 1-based in text,
/// 0-based in `index`).
struct Monomial {
  Variable variable = Variable::State;
  int index = 0;
  int power = 2;

  std::string to_string() const {
    return std::string(variable == Variable::State ? "x" : "u") + std::to_string(index + 1) +
           "^" + std::to_string(power);
  }

  /// Parses "x1^2", "u2^4". Throws std::invalid_argument on malformed text.
  static Monomial parse(const std::string& text) {
    static const std::regex pattern(R"(\s*([xu])(\d+)\s*\^\s*(\d+)\s*)");
    std::smatch match;
    if (!std::regex_match(text, match, pattern)) {
      throw std::invalid_argument("cannot parse feature '" + text + "' (expected e.g. x1^2 or u2^3)");
    }
    Monomial mono;
    mono.variable = match[1] == "x" ? Variable::State : Variable::Input;
    mono.index = std::stoi(match[2]) - 1;
    mono.power = std::stoi(match[3]);
    if (mono.index < 0) throw std::invalid_argument("feature coordinates are 1-based: " + text);
    return mono;
  }

  bool operator==(const Monomial&) const = default;
};

/// One scalar feature phi(x, u) with its gradients.
struct Feature {
  using ValueFn = std::function<double(const Vector&, const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&, const Vector&)>;

  std::string name;
  ValueFn value;
  GradientFn grad_x;
  GradientFn grad_u;
  std::optional<Monomial> monomial;  // set for serializable library features
};

/// Ordered feature set phi = col{phi_1, ..., phi_r}. The order fixes the index
/// of every recovered weight.
class FeatureSet {
 public:
  FeatureSet(int state_dim, int input_dim) : n_(state_dim), m_(input_dim) {
    detail::require_dims(n_ >= 1 && m_ >= 1, "feature set dimensions must be positive");
  }

  FeatureSet& add(Feature f) {
    features_.push_back(std::move(f));
    return *this;
  }

  int size() const { return static_cast<int>(features_.size()); }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  const Feature& operator[](int i) const { return features_.at(static_cast<std::size_t>(i)); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& f : features_) out.push_back(f.name);
    return out;
  }

  bool serializable() const {
    for (const auto& f : features_) {
      if (!f.monomial) return false;
    }
    return true;
  }

  std::vector<Monomial> monomials() const {
    if (!serializable()) throw std::logic_error("feature set contains non-monomial features");
    std::vector<Monomial> out;
    for (const auto& f : features_) out.push_back(*f.monomial);
    return out;
  }

  /// The first `count` features, in order.
  FeatureSet prefix(int count) const {
    if (count < 1 || count > size()) throw std::out_of_range("FeatureSet::prefix");
    FeatureSet out(n_, m_);
    for (int i = 0; i < count; ++i) out.add(features_[static_cast<std::size_t>(i)]);
    return out;
  }

  Vector evaluate(const Vector& x, const Vector& u) const {
    check(x, u);
    Vector out(size());
    for (int i = 0; i < size(); ++i) out[i] = features_[static_cast<std::size_t>(i)].value(x, u);
    return out;
  }

  /// d(phi)/dx, r x n.
  Matrix state_jacobian(const Vector& x, const Vector& u) const {
    check(x, u);
    Matrix out(size(), n_);
    for (int i = 0; i < size(); ++i) {
      out.row(i) = features_[static_cast<std::size_t>(i)].grad_x(x, u).transpose();
    }
    return out;
  }

  /// d(phi)/du, r x m.
  Matrix input_jacobian(const Vector& x, const Vector& u) const {
    check(x, u);
    Matrix out(size(), m_);
    for (int i = 0; i < size(); ++i) {
      out.row(i) = features_[static_cast<std::size_t>(i)].grad_u(x, u).transpose();
    }
    return out;
  }

  /// Weighted cost omega' phi(x, u).
  double cost(const Vector& omega, const Vector& x, const Vector& u) const {
    detail::require_dims(omega.size() == size(), "weight vector length must equal feature count");
    return omega.dot(evaluate(x, u));
  }

 private:
  void check(const Vector& x, const Vector& u) const {
    if (features_.empty()) throw std::logic_error("feature set is empty");
    detail::require_dims(x.size() == n_ && u.size() == m_,
                         "feature set expects x in R^" + std::to_string(n_) + " and u in R^" +
                             std::to_string(m_));
  }

  int n_;
  int m_;
  std::vector<Feature> features_;
};

inline Feature monomial_feature(const Monomial& mono, int state_dim, int input_dim) {
  const int dim = mono.variable == Variable::State ? state_dim : input_dim;
  if (mono.index < 0 || mono.index >= dim) {
    throw std::out_of_range("feature " + mono.to_string() + " refers to a coordinate outside R^" +
                            std::to_string(dim));
  }
  if (mono.power < 2) {
    throw std::invalid_argument("feature " + mono.to_string() + ": power must be at least 2");
  }
  const bool on_state = mono.variable == Variable::State;
  const int idx = mono.index;
  const int p = mono.power;
  auto coord = [on_state, idx](const Vector& x, const Vector& u) {
    return on_state ? x[idx] : u[idx];
  };
  auto derivative = [coord, p](const Vector& x, const Vector& u) {
    return static_cast<double>(p) * std::pow(coord(x, u), p - 1);
  };

  Feature f;
  f.name = mono.to_string();
  f.monomial = mono;
  f.value = [coord, p](const Vector& x, const Vector& u) { return std::pow(coord(x, u), p); };
  f.grad_x = [=](const Vector& x, const Vector& u) -> Vector {
    Vector g = Vector::Zero(x.size());
    if (on_state) g[idx] = derivative(x, u);
    return g;
  };
  f.grad_u = [=](const Vector& x, const Vector& u) -> Vector {
    Vector g = Vector::Zero(u.size());
    if (!on_state) g[idx] = derivative(x, u);
    return g;
  };
  return f;
}

/// Feature set of coordinate monomials, in the given order.
inline FeatureSet quadratic_feature_library(int state_dim, int input_dim,
                                            const std::vector<Monomial>& monomials) {
  if (monomials.empty()) throw std::invalid_argument("feature library needs at least one feature");
  FeatureSet set(state_dim, input_dim);
  for (const auto& mono : monomials) set.add(monomial_feature(mono, state_dim, input_dim));
  return set;
}

inline FeatureSet quadratic_feature_library(int state_dim, int input_dim,
                                            const std::vector<std::string>& descriptors) {
  std::vector<Monomial> monos;
  for (const auto& d : descriptors) monos.push_back(Monomial::parse(d));
  return quadratic_feature_library(state_dim, input_dim, monos);
}

}  // namespace rmioc
