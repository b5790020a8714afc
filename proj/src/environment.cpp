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

#include "prefwise/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace prefwise {

namespace {

constexpr double kBoundSlack = 1e-12;

// Dense orthogonal mixing matrix: product of Givens rotations over every
// coordinate pair with fixed, distinct angles.
Eigen::MatrixXd mixing_rotation(int n) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double angle = 0.35 + 0.15 * i + 0.1 * j;
      Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
      g(i, i) = std::cos(angle);
      g(j, j) = std::cos(angle);
      g(i, j) = -std::sin(angle);
      g(j, i) = std::sin(angle);
      q = g * q;
    }
  }
  return q;
}

double smoothstep(double t, double start, double end) {
  if (t <= start) return 0.0;
  if (t >= end) return 1.0;
  const double u = (t - start) / (end - start);
  return 0.5 - 0.5 * std::cos(std::numbers::pi * u);
}

double smoothstep_rate(double t, double start, double end) {
  if (t <= start || t >= end) return 0.0;
  const double u = (t - start) / (end - start);
  return 0.5 * std::numbers::pi * std::sin(std::numbers::pi * u) / (end - start);
}

// Other car at time t, from its initial (x, y, heading, speed).
Eigen::Vector4d other_car_state(const DriverParams& p,
                                const Eigen::Vector4d& start, double t) {
  const double forward_speed = start[3];
  const double shift = p.merge_target_x - start[0];
  const double lateral_rate = shift * smoothstep_rate(t, p.merge_start, p.merge_end);
  Eigen::Vector4d s;
  s[0] = start[0] + shift * smoothstep(t, p.merge_start, p.merge_end);
  s[1] = start[1] + forward_speed * t;
  s[2] = std::atan2(forward_speed, lateral_rate);
  s[3] = std::hypot(forward_speed, lateral_rate);
  return s;
}

FeatureVector driver_features(const DriverParams& p,
                              const std::vector<Eigen::VectorXd>& states) {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(4);
  for (const auto& s : states) {
    double lane_gap = std::numeric_limits<double>::infinity();
    for (double c : p.lane_centers) {
      lane_gap = std::min(lane_gap, (s[0] - c) * (s[0] - c));
    }
    const double dx = s[0] - s[4];
    const double dy = s[1] - s[5];
    phi[0] += std::exp(-p.lane_c * lane_gap);
    phi[1] += (s[3] - 1.0) * (s[3] - 1.0);
    phi[2] += std::sin(s[2]);  // cos of the angle to the road (+y)
    phi[3] += std::exp(-p.gap_x_c * dx * dx - p.gap_y_c * dy * dy);
  }
  return FeatureVector(phi / static_cast<double>(states.size()));
}

}  // namespace

std::string to_string(EnvKind kind) {
  return kind == EnvKind::kDriver ? "driver" : "lds";
}

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "lds") return EnvKind::kLds;
  if (name == "driver") return EnvKind::kDriver;
  throw std::invalid_argument("unknown environment '" + name +
                              "' (expected lds or driver)");
}

std::string to_string(DemoMethod method) {
  return method == DemoMethod::kShooting ? "shooting" : "pool_argmax";
}

DemoMethod demo_method_from_string(const std::string& name) {
  if (name == "pool_argmax") return DemoMethod::kPoolArgmax;
  if (name == "shooting") return DemoMethod::kShooting;
  throw std::invalid_argument("unknown demo method '" + name + "'");
}

int EnvironmentSpec::segment_length() const {
  return kind == EnvKind::kDriver ? driver.steps_per_segment : 1;
}

std::vector<std::string> EnvironmentSpec::feature_labels() const {
  if (kind == EnvKind::kDriver) {
    return {"lane_keeping", "speed_deviation", "heading", "proximity"};
  }
  std::vector<std::string> labels;
  for (int i = 0; i < feature_dim; ++i) labels.push_back("state_" + std::to_string(i));
  return labels;
}

void EnvironmentSpec::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (horizon % segment_length() != 0) {
    throw std::invalid_argument("horizon must be a multiple of the segment length");
  }
  if (static_cast<int>(action_bounds.size()) != action_dim) {
    throw std::invalid_argument("need one action bound per action dimension");
  }
  for (const auto& b : action_bounds) {
    if (!(b.lower < b.upper)) throw std::invalid_argument("empty action bound");
  }
  if (initial_state.size() != state_dim) {
    throw std::invalid_argument("initial state has the wrong dimension");
  }
  if (kind == EnvKind::kLds) {
    if (feature_dim != state_dim) {
      throw std::invalid_argument("lds features are the state values");
    }
    if (state_matrix.rows() != state_dim || state_matrix.cols() != state_dim ||
        input_matrix.rows() != state_dim || input_matrix.cols() != action_dim) {
      throw std::invalid_argument("lds matrices have the wrong shape");
    }
  } else {
    if (state_dim != 8 || action_dim != 2 || feature_dim != 4) {
      throw std::invalid_argument("driver uses 8 states, 2 actions, 4 features");
    }
    if (driver.lane_centers.empty()) {
      throw std::invalid_argument("driver needs at least one lane");
    }
    if (horizon != driver.segments * driver.steps_per_segment) {
      throw std::invalid_argument("driver horizon must be segments * steps");
    }
  }
}

EnvironmentSpec EnvironmentSpec::lds() {
  EnvironmentSpec env;
  env.kind = EnvKind::kLds;
  env.horizon = 20;
  env.state_dim = 6;
  env.action_dim = 3;
  env.feature_dim = 6;
  env.action_bounds.assign(3, ActionBound{-1.0, 1.0});
  env.initial_state = Eigen::VectorXd::Zero(6);
  env.state_matrix = 0.95 * mixing_rotation(6);
  env.input_matrix = Eigen::MatrixXd::Zero(6, 3);
  env.input_matrix.topRows(3) = Eigen::MatrixXd::Identity(3, 3);
  return env;
}

EnvironmentSpec EnvironmentSpec::driver_default() {
  EnvironmentSpec env;
  env.kind = EnvKind::kDriver;
  env.driver = DriverParams{};
  env.horizon = env.driver.segments * env.driver.steps_per_segment;
  env.state_dim = 8;
  env.action_dim = 2;
  env.feature_dim = 4;
  env.action_bounds = {ActionBound{-2.0, 2.0}, ActionBound{-2.0, 2.0}};
  env.initial_state.resize(8);
  env.initial_state << 0.0, -0.3, std::numbers::pi / 2, 0.4,  // ego
      0.17, 0.0, std::numbers::pi / 2, 0.41;                  // other car
  return env;
}

EnvironmentSpec EnvironmentSpec::from_kind(EnvKind kind) {
  return kind == EnvKind::kDriver ? driver_default() : lds();
}

std::vector<Eigen::VectorXd> expand_controls(
    const EnvironmentSpec& env, const std::vector<Eigen::VectorXd>& controls) {
  if (static_cast<int>(controls.size()) != env.num_segments()) {
    throw std::invalid_argument("expected " + std::to_string(env.num_segments()) +
                                " control segments, got " +
                                std::to_string(controls.size()));
  }
  std::vector<Eigen::VectorXd> actions;
  actions.reserve(env.horizon);
  for (const auto& c : controls) {
    for (int k = 0; k < env.segment_length(); ++k) actions.push_back(c);
  }
  return actions;
}

Trajectory rollout(const EnvironmentSpec& env,
                   const Eigen::VectorXd& initial_state,
                   const std::vector<Eigen::VectorXd>& actions) {
  if (static_cast<int>(actions.size()) != env.horizon) {
    throw std::invalid_argument("expected " + std::to_string(env.horizon) +
                                " actions, got " + std::to_string(actions.size()));
  }
  if (initial_state.size() != env.state_dim) {
    throw std::invalid_argument("initial state has dimension " +
                                std::to_string(initial_state.size()) +
                                ", environment expects " +
                                std::to_string(env.state_dim));
  }
  for (int t = 0; t < env.horizon; ++t) {
    if (actions[t].size() != env.action_dim) {
      throw std::invalid_argument("action at timestep " + std::to_string(t) +
                                  " has the wrong dimension");
    }
    for (int i = 0; i < env.action_dim; ++i) {
      const double a = actions[t][i];
      const ActionBound& b = env.action_bounds[i];
      if (!std::isfinite(a) || a < b.lower - kBoundSlack ||
          a > b.upper + kBoundSlack) {
        throw std::invalid_argument(
            "action out of bounds at timestep " + std::to_string(t) +
            ", dimension " + std::to_string(i) + ": " + std::to_string(a) +
            " not in [" + std::to_string(b.lower) + ", " +
            std::to_string(b.upper) + "]");
      }
    }
  }

  Trajectory traj;
  traj.initial_state = initial_state;
  traj.actions = actions;
  traj.states.reserve(env.horizon + 1);
  traj.states.push_back(initial_state);

  if (env.kind == EnvKind::kLds) {
    Eigen::VectorXd phi = initial_state;
    for (int t = 0; t < env.horizon; ++t) {
      Eigen::VectorXd next =
          env.state_matrix * traj.states.back() + env.input_matrix * actions[t];
      phi += next;
      traj.states.push_back(std::move(next));
    }
    traj.features = FeatureVector(std::move(phi));
    return traj;
  }

  const DriverParams& p = env.driver;
  const Eigen::Vector4d other_start = initial_state.tail<4>();
  for (int t = 0; t < env.horizon; ++t) {
    const Eigen::VectorXd& s = traj.states.back();
    const double steer = actions[t][0];
    const double accel = actions[t][1];
    Eigen::VectorXd next(8);
    next[0] = s[0] + p.dt * s[3] * std::cos(s[2]);
    next[1] = s[1] + p.dt * s[3] * std::sin(s[2]);
    next[2] = s[2] + p.dt * s[3] * steer;
    next[3] = s[3] + p.dt * (accel - p.friction * s[3]);
    next.tail<4>() = other_car_state(p, other_start, p.dt * (t + 1));
    traj.states.push_back(std::move(next));
  }
  traj.features = driver_features(p, traj.states);
  return traj;
}

const FeatureVector& QueryPool::features(int id) const { return entry(id).features; }

const PoolEntry& QueryPool::entry(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entries.size()) {
    throw std::out_of_range("pool has no entry " + std::to_string(id));
  }
  return entries[id];
}

Eigen::MatrixXd QueryPool::feature_matrix() const {
  Eigen::MatrixXd m(entries.size(), env.feature_dim);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    m.row(i) = entries[i].features.values().transpose();
  }
  return m;
}

QueryPool generate_pool(const EnvironmentSpec& env, int size,
                        std::uint64_t seed, int max_retries) {
  if (size < 2) throw std::invalid_argument("pool size must be >= 2");
  env.validate();
  if (max_retries < 0) max_retries = std::max(100, size / 10);

  QueryPool pool;
  pool.env = env;
  pool.seed = seed;
  pool.entries.reserve(size);

  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> draws;
  for (const auto& b : env.action_bounds) draws.emplace_back(b.lower, b.upper);

  std::set<std::vector<double>> seen;
  int retries = 0;
  while (static_cast<int>(pool.entries.size()) < size) {
    std::vector<Eigen::VectorXd> controls(env.num_segments(),
                                          Eigen::VectorXd(env.action_dim));
    for (auto& c : controls) {
      for (int i = 0; i < env.action_dim; ++i) c[i] = draws[i](rng);
    }
    Trajectory traj = rollout(env, env.initial_state, expand_controls(env, controls));
    const Eigen::VectorXd& f = traj.features.values();
    if (!seen.emplace(f.data(), f.data() + f.size()).second) {
      if (++retries > max_retries) {
        throw std::runtime_error(
            "could only generate " + std::to_string(pool.entries.size()) +
            " distinct pool entries out of " + std::to_string(size));
      }
      continue;
    }
    PoolEntry entry;
    entry.id = static_cast<int>(pool.entries.size());
    entry.initial_state = env.initial_state;
    entry.actions = std::move(traj.actions);
    entry.features = std::move(traj.features);
    pool.entries.push_back(std::move(entry));
  }
  return pool;
}

int pool_argmax(const QueryPool& pool, const RewardParams& true_params) {
  if (pool.entries.empty()) throw std::invalid_argument("empty pool");
  int best = 0;
  double best_reward = trajectory_reward(true_params, pool.entries[0].features);
  for (std::size_t i = 1; i < pool.entries.size(); ++i) {
    const double r = trajectory_reward(true_params, pool.entries[i].features);
    if (r > best_reward) {
      best_reward = r;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Trajectory synthesize_demo(const QueryPool& pool,
                           const RewardParams& true_params, DemoMethod method,
                           const ShootingOptions& shooting) {
  if (pool.entries.empty()) throw std::invalid_argument("empty pool");
  if (!(true_params.norm() > 0.0)) {
    throw std::invalid_argument("demo synthesis needs nonzero true weights");
  }
  const EnvironmentSpec& env = pool.env;
  const PoolEntry& start = pool.entries[pool_argmax(pool, true_params)];
  Trajectory best = rollout(env, start.initial_state, start.actions);
  if (method == DemoMethod::kPoolArgmax) return best;

  double best_reward = trajectory_reward(true_params, best.features);
  std::vector<Eigen::VectorXd> controls;
  for (int s = 0; s < env.num_segments(); ++s) {
    controls.push_back(best.actions[s * env.segment_length()]);
  }

  std::mt19937_64 rng(shooting.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double scale = shooting.initial_scale;
  for (int it = 0; it < shooting.iterations; ++it) {
    std::vector<Eigen::VectorXd> incumbent = controls;
    for (int c = 0; c < shooting.candidates_per_iteration; ++c) {
      std::vector<Eigen::VectorXd> candidate = incumbent;
      for (auto& u : candidate) {
        for (int i = 0; i < env.action_dim; ++i) {
          const ActionBound& b = env.action_bounds[i];
          u[i] = std::clamp(u[i] + scale * (b.upper - b.lower) * normal(rng),
                            b.lower, b.upper);
        }
      }
      Trajectory traj =
          rollout(env, start.initial_state, expand_controls(env, candidate));
      const double r = trajectory_reward(true_params, traj.features);
      if (r > best_reward) {
        best_reward = r;
        best = std::move(traj);
        controls = std::move(candidate);
      }
    }
    scale *= shooting.decay;
  }
  return best;
}

}  // namespace prefwise
