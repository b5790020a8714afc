// Copyright 2026 The Prefwise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PREFWISE_REWARD_HPP_
#define PREFWISE_REWARD_HPP_

#include <Eigen/Dense>
#include <vector>

namespace prefwise {

/// Trajectory feature vector Phi(xi): cumulative (or averaged) per-state
/// features of one rollout. Entries are always finite.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(Eigen::VectorXd values);
  FeatureVector(Eigen::VectorXd values, Eigen::Index expected_dim);

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index dim() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

  bool operator==(const FeatureVector& other) const;

 private:
  Eigen::VectorXd values_;
};

/// Linear reward weights omega, constrained to the closed unit ball.
///
/// Vectors whose norm exceeds one by at most kNormSlack are accepted and
/// rescaled to unit norm; anything further out is rejected.
class RewardParams {
 public:
  static constexpr double kNormSlack = 1e-9;

  explicit RewardParams(Eigen::VectorXd weights);
  RewardParams(Eigen::VectorXd weights, Eigen::Index expected_dim);

  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index dim() const { return weights_.size(); }
  double norm() const { return weights_.norm(); }

 private:
  Eigen::VectorXd weights_;
};

/// A rollout: initial state, per-step actions (length T) and the resulting
/// states (length T + 1), plus the trajectory features.
struct Trajectory {
  Eigen::VectorXd initial_state;
  std::vector<Eigen::VectorXd> actions;
  std::vector<Eigen::VectorXd> states;
  FeatureVector features;
};

/// R(xi) = omega . Phi(xi). Throws std::invalid_argument on a dimension
/// mismatch.
double trajectory_reward(const RewardParams& params,
                         const FeatureVector& features);

}  // namespace prefwise

#endif  // PREFWISE_REWARD_HPP_
