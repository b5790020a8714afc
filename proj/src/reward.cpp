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

#include "prefwise/reward.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace prefwise {

FeatureVector::FeatureVector(Eigen::VectorXd values)
    : values_(std::move(values)) {
  if (!values_.allFinite()) {
    throw std::invalid_argument("feature vector has non-finite entries");
  }
}

FeatureVector::FeatureVector(Eigen::VectorXd values, Eigen::Index expected_dim)
    : FeatureVector(std::move(values)) {
  if (values_.size() != expected_dim) {
    throw std::invalid_argument(
        "feature vector has dimension " + std::to_string(values_.size()) +
        ", environment expects " + std::to_string(expected_dim));
  }
}

bool FeatureVector::operator==(const FeatureVector& other) const {
  return values_.size() == other.values_.size() &&
         (values_.array() == other.values_.array()).all();
}

RewardParams::RewardParams(Eigen::VectorXd weights)
    : weights_(std::move(weights)) {
  if (weights_.size() == 0) {
    throw std::invalid_argument("reward weights must be non-empty");
  }
  if (!weights_.allFinite()) {
    throw std::invalid_argument("reward weights have non-finite entries");
  }
  const double n = weights_.norm();
  if (n > 1.0 + kNormSlack) {
    throw std::invalid_argument("reward weights have norm " +
                                std::to_string(n) + " > 1");
  }
  if (n > 1.0) weights_ /= n;
}

RewardParams::RewardParams(Eigen::VectorXd weights, Eigen::Index expected_dim)
    : RewardParams(std::move(weights)) {
  if (weights_.size() != expected_dim) {
    throw std::invalid_argument(
        "reward weights have dimension " + std::to_string(weights_.size()) +
        ", environment expects " + std::to_string(expected_dim));
  }
}

double trajectory_reward(const RewardParams& params,
                         const FeatureVector& features) {
  if (params.dim() != features.dim()) {
    throw std::invalid_argument(
        "dimension mismatch: weights have dimension " +
        std::to_string(params.dim()) + ", features have dimension " +
        std::to_string(features.dim()));
  }
  return params.weights().dot(features.values());
}

}  // namespace prefwise
