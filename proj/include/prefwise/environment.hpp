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

#ifndef PREFWISE_ENVIRONMENT_HPP_
#define PREFWISE_ENVIRONMENT_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "prefwise/reward.hpp"

namespace prefwise {

enum class EnvKind { kLds, kDriver };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

struct ActionBound {
  double lower = -1.0;
  double upper = 1.0;
};

/// Kinematic-car highway scene. The ego car (x, y, heading, speed) is driven
/// by (steering, acceleration); the other car follows a scripted lane change
/// that depends only on its initial state. Positions are in road units with
/// the road running along +y.
struct DriverParams {
  double dt = 0.1;
  double friction = 1.0;
  std::vector<double> lane_centers{-0.17, 0.0, 0.17};
  int segments = 5;
  int steps_per_segment = 10;
  // Feature constants: exp(-lane_c * d_lane^2) and
  // exp(-gap_x_c * dx^2 - gap_y_c * dy^2).
  double lane_c = 30.0;
  double gap_x_c = 7.0;
  double gap_y_c = 3.0;
  // Other car drifts laterally to `merge_target_x` between these times (s).
  double merge_start = 1.0;
  double merge_end = 2.5;
  double merge_target_x = 0.0;
};

/// Deterministic environment descriptor. Everything a rollout needs lives
/// here, so a pool file is self-describing.
struct EnvironmentSpec {
  EnvKind kind = EnvKind::kLds;
  int horizon = 20;
  int state_dim = 6;
  int action_dim = 3;
  int feature_dim = 6;
  std::vector<ActionBound> action_bounds;
  Eigen::VectorXd initial_state;
  // lds: s_{t+1} = A s_t + B a_t
  Eigen::MatrixXd state_matrix;
  Eigen::MatrixXd input_matrix;
  DriverParams driver;

  /// Number of consecutive steps sharing one control value.
  int segment_length() const;
  int num_segments() const { return horizon / segment_length(); }
  std::vector<std::string> feature_labels() const;
  void validate() const;

  static EnvironmentSpec lds();
  static EnvironmentSpec driver_default();
  static EnvironmentSpec from_kind(EnvKind kind);
};

/// Rolls out `actions` (length T) from `initial_state`. Throws if an action
/// leaves its bounds, naming the timestep and dimension.
Trajectory rollout(const EnvironmentSpec& env,
                   const Eigen::VectorXd& initial_state,
                   const std::vector<Eigen::VectorXd>& actions);

/// Expands per-segment controls into per-step actions.
std::vector<Eigen::VectorXd> expand_controls(
    const EnvironmentSpec& env, const std::vector<Eigen::VectorXd>& controls);

struct PoolEntry {
  int id = 0;
  Eigen::VectorXd initial_state;
  std::vector<Eigen::VectorXd> actions;
  FeatureVector features;
};

/// Discretized query space: random rollouts with cached features.
struct QueryPool {
  EnvironmentSpec env;
  std::uint64_t seed = 0;
  std::vector<PoolEntry> entries;

  std::size_t size() const { return entries.size(); }
  const FeatureVector& features(int id) const;
  const PoolEntry& entry(int id) const;
  /// entries x feature_dim matrix.
  Eigen::MatrixXd feature_matrix() const;
};

/// Draws `size` action sequences uniformly within bounds. Entries whose
/// features duplicate an earlier entry are redrawn, at most `max_retries`
/// times in total.
QueryPool generate_pool(const EnvironmentSpec& env, int size,
                        std::uint64_t seed, int max_retries = -1);

enum class DemoMethod { kPoolArgmax, kShooting };

std::string to_string(DemoMethod method);
DemoMethod demo_method_from_string(const std::string& name);

struct ShootingOptions {
  int iterations = 40;
  int candidates_per_iteration = 16;
  double initial_scale = 0.5;  // fraction of each action range
  double decay = 0.9;
  std::uint64_t seed = 0;
};

/// Id of the pool entry with the highest reward under `true_params` (lowest
/// id among ties).
int pool_argmax(const QueryPool& pool, const RewardParams& true_params);

/// Demonstration for a simulated user. Shooting refines the pool argmax with
/// random perturbations and never returns a lower reward.
Trajectory synthesize_demo(const QueryPool& pool,
                           const RewardParams& true_params, DemoMethod method,
                           const ShootingOptions& shooting = {});

}  // namespace prefwise

#endif  // PREFWISE_ENVIRONMENT_HPP_
