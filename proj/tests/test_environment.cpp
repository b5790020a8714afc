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

#include <gtest/gtest.h>

#include <cmath>

#include "prefwise/stats.hpp"

namespace prefwise {
namespace {

EnvironmentSpec identity_lds(int horizon) {
  EnvironmentSpec env = EnvironmentSpec::lds();
  env.horizon = horizon;
  env.state_dim = env.action_dim = env.feature_dim = 3;
  env.action_bounds.assign(3, ActionBound{-1.0, 1.0});
  env.initial_state = Eigen::VectorXd::Zero(3);
  env.state_matrix = Eigen::MatrixXd::Identity(3, 3);
  env.input_matrix = Eigen::MatrixXd::Identity(3, 3);
  env.validate();
  return env;
}

std::vector<Eigen::VectorXd> constant_actions(const EnvironmentSpec& env, double v) {
  return std::vector<Eigen::VectorXd>(env.horizon, Eigen::VectorXd::Constant(env.action_dim, v));
}

TEST(LdsRollout, ZeroActionsStayAtOrigin) {
  const EnvironmentSpec env = identity_lds(5);
  const Trajectory t = rollout(env, env.initial_state, constant_actions(env, 0.0));
  ASSERT_EQ(t.states.size(), 6u);
  EXPECT_EQ(t.features.values(), Eigen::VectorXd::Zero(3));
}

TEST(LdsRollout, HandSummedRecursion) {
  const EnvironmentSpec env = identity_lds(3);
  auto actions = constant_actions(env, 0.0);
  actions[0] << 1.0, 0.0, 0.0;
  const Trajectory t = rollout(env, env.initial_state, actions);
  // s0 = 0, s1 = s2 = s3 = e1, so the sum is 3 e1.
  EXPECT_EQ(t.states[1], Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(t.states[3], Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(t.features.values(), Eigen::Vector3d(3, 0, 0));
}

TEST(LdsRollout, DefaultDynamicsAreStableAndMixing) {
  const EnvironmentSpec env = EnvironmentSpec::lds();
  const Eigen::VectorXcd eig = env.state_matrix.eigenvalues();
  for (Eigen::Index i = 0; i < eig.size(); ++i) EXPECT_NEAR(std::abs(eig[i]), 0.95, 1e-9);
  EXPECT_EQ(env.horizon, 20);
  EXPECT_EQ(env.feature_dim, 6);
}

TEST(Rollout, BoundsAndShapeErrors) {
  const EnvironmentSpec env = EnvironmentSpec::lds();
  auto actions = constant_actions(env, 0.0);
  actions[7][2] = 1.5;
  try {
    rollout(env, env.initial_state, actions);
    FAIL();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("timestep 7"), std::string::npos);
    EXPECT_NE(msg.find("dimension 2"), std::string::npos);
  }
  EXPECT_THROW(rollout(env, env.initial_state, std::vector<Eigen::VectorXd>(3)),
               std::invalid_argument);
  EXPECT_THROW(rollout(env, Eigen::VectorXd::Zero(2), constant_actions(env, 0.0)),
               std::invalid_argument);
}

TEST(Rollout, Deterministic) {
  const EnvironmentSpec env = EnvironmentSpec::driver_default();
  auto actions = constant_actions(env, 0.3);
  const Trajectory a = rollout(env, env.initial_state, actions);
  const Trajectory b = rollout(env, env.initial_state, actions);
  EXPECT_EQ(a.features, b.features);
  for (std::size_t i = 0; i < a.states.size(); ++i) EXPECT_EQ(a.states[i], b.states[i]);
}

TEST(DriverRollout, LaneCenteredStraightDriving) {
  EnvironmentSpec env = EnvironmentSpec::driver_default();
  const Trajectory t = rollout(env, env.initial_state, constant_actions(env, 0.0));
  for (const auto& s : t.states) {
    EXPECT_NEAR(s[0], 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(std::exp(-env.driver.lane_c * s[0] * s[0]), 1.0);
  }
  EXPECT_DOUBLE_EQ(t.features[0], 1.0);
  EXPECT_DOUBLE_EQ(t.features[2], 1.0);
}

TEST(DriverRollout, FeatureRangesOverRandomPool) {
  const QueryPool pool = generate_pool(EnvironmentSpec::driver_default(), 500, 3);
  for (const auto& e : pool.entries) {
    EXPECT_GT(e.features[0], 0.0);
    EXPECT_LE(e.features[0], 1.0);
    EXPECT_GE(e.features[1], 0.0);
    EXPECT_GE(e.features[2], -1.0);
    EXPECT_LE(e.features[2], 1.0);
    EXPECT_GT(e.features[3], 0.0);
    EXPECT_LE(e.features[3], 1.0);
  }
}

TEST(DriverRollout, HandComputedFirstStep) {
  const EnvironmentSpec env = EnvironmentSpec::driver_default();
  auto actions = constant_actions(env, 0.0);
  actions[0] << 0.5, 1.0;
  const Trajectory t = rollout(env, env.initial_state, actions);
  const Eigen::VectorXd& s0 = env.initial_state;
  const double dt = env.driver.dt;
  EXPECT_NEAR(t.states[1][0], s0[0] + dt * s0[3] * std::cos(s0[2]), 1e-15);
  EXPECT_NEAR(t.states[1][1], s0[1] + dt * s0[3] * std::sin(s0[2]), 1e-15);
  EXPECT_NEAR(t.states[1][2], s0[2] + dt * s0[3] * 0.5, 1e-15);
  EXPECT_NEAR(t.states[1][3], s0[3] + dt * (1.0 - env.driver.friction * s0[3]), 1e-15);
  // Other car keeps its lane before the merge window.
  EXPECT_NEAR(t.states[1][4], s0[4], 1e-15);
  EXPECT_NEAR(t.states[1][5], s0[5] + dt * s0[7], 1e-15);
}

TEST(Pool, DeterministicAndSelfConsistent) {
  const EnvironmentSpec env = EnvironmentSpec::lds();
  const QueryPool a = generate_pool(env, 100, 42);
  const QueryPool b = generate_pool(env, 100, 42);
  ASSERT_EQ(a.size(), 100u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.entries[i].id, static_cast<int>(i));
    EXPECT_EQ(a.entries[i].features, b.entries[i].features);
    EXPECT_EQ(rollout(env, a.entries[i].initial_state, a.entries[i].actions).features,
              a.entries[i].features);
  }
}

TEST(Pool, NoDuplicateFeatures) {
  const QueryPool p = generate_pool(EnvironmentSpec::driver_default(), 300, 9);
  std::set<std::vector<double>> seen;
  for (const auto& e : p.entries) {
    const auto& v = e.features.values();
    EXPECT_TRUE(seen.emplace(v.data(), v.data() + v.size()).second);
  }
}

TEST(Pool, FullColumnRank) {
  for (EnvKind kind : {EnvKind::kLds, EnvKind::kDriver}) {
    const EnvironmentSpec env = EnvironmentSpec::from_kind(kind);
    const QueryPool p = generate_pool(env, 10 * env.feature_dim, 77);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(p.feature_matrix());
    EXPECT_EQ(lu.rank(), env.feature_dim) << to_string(kind);
  }
}

TEST(Pool, SeedsAgreeInDistribution) {
  const EnvironmentSpec env = EnvironmentSpec::lds();
  const Eigen::MatrixXd a = generate_pool(env, 2000, 1).feature_matrix();
  const Eigen::MatrixXd b = generate_pool(env, 2000, 2).feature_matrix();
  for (int j = 0; j < env.feature_dim; ++j) {
    std::vector<double> ca(a.rows()), cb(b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      ca[i] = a(i, j);
      cb[i] = b(i, j);
    }
    const Summary sa = summarize(ca), sb = summarize(cb);
    const double se = std::hypot(sa.std_error, sb.std_error);
    EXPECT_LT(std::abs(sa.mean - sb.mean), 3 * se) << "feature " << j;
  }
}

QueryPool tiny_pool(std::vector<Eigen::Vector2d> feats) {
  QueryPool pool;
  pool.env = EnvironmentSpec::lds();
  for (std::size_t i = 0; i < feats.size(); ++i) {
    PoolEntry e;
    e.id = static_cast<int>(i);
    e.features = FeatureVector(Eigen::VectorXd(feats[i]));
    pool.entries.push_back(e);
  }
  return pool;
}

TEST(PoolArgmax, ByInspectionAndTies) {
  const QueryPool p = tiny_pool({{1, 0}, {0, 1}, {-1, 0}});
  EXPECT_EQ(pool_argmax(p, RewardParams(Eigen::Vector2d(1, 0))), 0);
  EXPECT_EQ(pool_argmax(p, RewardParams(Eigen::Vector2d(0, 1))), 1);
  const QueryPool tied = tiny_pool({{0, 0}, {2, 5}, {2, -5}});
  EXPECT_EQ(pool_argmax(tied, RewardParams(Eigen::Vector2d(1, 0))), 1);
}

TEST(SynthesizeDemo, ShootingNeverWorseThanPoolArgmax) {
  for (EnvKind kind : {EnvKind::kLds, EnvKind::kDriver}) {
    const QueryPool pool = generate_pool(EnvironmentSpec::from_kind(kind), 200, 5);
    for (int u = 0; u < 5; ++u) {
      Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(pool.env.feature_dim, -1.0 + 0.3 * u, 1.0);
      const RewardParams params(w / w.norm());
      const Trajectory base = synthesize_demo(pool, params, DemoMethod::kPoolArgmax);
      ShootingOptions opts;
      opts.seed = static_cast<std::uint64_t>(u);
      opts.iterations = 10;
      const Trajectory shot = synthesize_demo(pool, params, DemoMethod::kShooting, opts);
      EXPECT_GE(trajectory_reward(params, shot.features),
                trajectory_reward(params, base.features));
      EXPECT_EQ(base.features, pool.features(pool_argmax(pool, params)));
    }
  }
}

}  // namespace
}  // namespace prefwise
