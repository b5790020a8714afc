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

#include "prefwise/query.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace prefwise {
namespace {

QueryPool pool_of(const std::vector<Eigen::VectorXd>& feats) {
  QueryPool pool;
  pool.env = EnvironmentSpec::lds();
  for (std::size_t i = 0; i < feats.size(); ++i) {
    PoolEntry e;
    e.id = static_cast<int>(i);
    e.features = FeatureVector(feats[i]);
    pool.entries.push_back(e);
  }
  return pool;
}

SampleSet samples_of(std::vector<Eigen::VectorXd> w) {
  SampleSet s;
  s.samples = std::move(w);
  return s;
}

SampleSet random_samples(int m, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd w(d);
    for (int j = 0; j < d; ++j) w[j] = n(rng);
    out.push_back(w.normalized() * std::pow(u(rng), 1.0 / d));
  }
  return samples_of(out);
}

std::vector<Eigen::VectorXd> random_features(int n, int d, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, scale);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd f(d);
    for (int j = 0; j < d; ++j) f[j] = g(rng);
    out.push_back(f);
  }
  return out;
}

// Direct evaluation of the estimator from its definition.
double oracle_ig(const std::vector<std::vector<double>>& p) {
  const double m = static_cast<double>(p.size());
  double total = 0.0;
  for (std::size_t q = 0; q < p[0].size(); ++q) {
    double s = 0.0;
    for (const auto& row : p) s += row[q];
    for (const auto& row : p) {
      if (row[q] > 0) total += row[q] * std::log2(m * row[q] / s);
    }
  }
  return total / m;
}

std::vector<std::vector<double>> oracle_table(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                              const SampleSet& s, const ChoiceModelConfig& c) {
  std::vector<std::vector<double>> out;
  for (const auto& w : s.samples) {
    const double r0 = c.beta * w.dot(a), r1 = c.beta * w.dot(b);
    if (c.kind == ChoiceKind::kStrict) {
      out.push_back({std::exp(r0) / (std::exp(r0) + std::exp(r1)),
                     std::exp(r1) / (std::exp(r0) + std::exp(r1))});
    } else {
      const double p0 = 1 / (1 + std::exp(c.delta + r1 - r0));
      const double p1 = 1 / (1 + std::exp(c.delta + r0 - r1));
      out.push_back({p0, p1, (std::exp(2 * c.delta) - 1) * p0 * p1});
    }
  }
  return out;
}

const Eigen::VectorXd kBig = Eigen::Vector2d(1000, 0);
const Eigen::VectorXd kZero = Eigen::Vector2d(0, 0);

TEST(VolumeRemoval, TrivialQueryIsGlobalMinimum) {
  std::mt19937_64 rng(1);
  const SampleSet s = random_samples(10, 2, rng);
  const QueryPool pool = pool_of({Eigen::Vector2d(0.3, 0.7)});
  EXPECT_NEAR(vr_objective({{0, 0}}, pool, s, ChoiceModelConfig::strict()), 50.0, 1e-12);
}

TEST(VolumeRemoval, DeterministicQueryIsMaximum) {
  const SampleSet s = samples_of(std::vector<Eigen::VectorXd>(10, Eigen::Vector2d(0.5, 0.1)));
  const QueryPool pool = pool_of({kBig, kZero});
  EXPECT_NEAR(vr_objective({{0, 1}}, pool, s, ChoiceModelConfig::strict()), 100.0, 1e-9);
}

TEST(VolumeRemoval, SplitQueryTiesTrivialQuery) {
  std::vector<Eigen::VectorXd> w(5, Eigen::Vector2d(1, 0));
  for (int i = 0; i < 5; ++i) w.push_back(Eigen::Vector2d(-1, 0));
  const SampleSet s = samples_of(w);
  const QueryPool pool = pool_of({kBig, kZero});
  EXPECT_NEAR(vr_objective({{0, 1}}, pool, s, ChoiceModelConfig::strict()), 50.0, 1e-9);
  EXPECT_NEAR(ig_objective({{0, 1}}, pool, s, ChoiceModelConfig::strict()), 1.0, 1e-9);
  EXPECT_EQ(ig_objective({{0, 0}}, pool, s, ChoiceModelConfig::strict()), 0.0);
}

TEST(InfoGain, CoinFlipQueryIsUninformative) {
  std::mt19937_64 rng(2);
  const SampleSet s = random_samples(20, 2, rng);
  // Orthogonal to every sample's reward difference: P = 0.5 everywhere.
  const QueryPool pool = pool_of({Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0) * 2});
  EXPECT_NEAR(ig_objective({{0, 1}}, pool, s, ChoiceModelConfig::strict()), 0.0, 1e-12);
}

TEST(InfoGain, MatchesDefinitionOracle) {
  std::mt19937_64 rng(3);
  for (const ChoiceModelConfig& c :
       {ChoiceModelConfig::strict(), ChoiceModelConfig::weak(0.8), ChoiceModelConfig::weak(1.5, 2.0)}) {
    for (int trial = 0; trial < 50; ++trial) {
      const SampleSet s = random_samples(30, 3, rng);
      const auto f = random_features(2, 3, 2.0, rng);
      const OutcomeTable t = build_outcome_table(FeatureVector(f[0]), FeatureVector(f[1]), s, c);
      const auto o = oracle_table(f[0], f[1], s, c);
      for (int m = 0; m < 30; ++m) {
        for (int q = 0; q < c.num_outcomes(); ++q) EXPECT_NEAR(t.at(m, q), o[m][q], 1e-12);
      }
      EXPECT_NEAR(ig_objective(t), std::max(0.0, oracle_ig(o)), 1e-10);
    }
  }
}

TEST(Objectives, BoundsOnRandomQueries) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const SampleSet s = random_samples(25, 4, rng);
    const auto f = random_features(2, 4, 3.0, rng);
    for (const ChoiceModelConfig& c : {ChoiceModelConfig::strict(), ChoiceModelConfig::weak(1.0)}) {
      const OutcomeTable t = build_outcome_table(FeatureVector(f[0]), FeatureVector(f[1]), s, c);
      const double ig = ig_objective(t);
      EXPECT_GE(ig, -1e-12);
      EXPECT_LE(ig, std::log2(c.num_outcomes()) + 1e-12);
      EXPECT_GE(vr_objective(t), 25.0 * 25.0 / c.num_outcomes() - 1e-9);
    }
  }
}

TEST(Objectives, ShiftInvariantPerSample) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2), shift(-50, 50);
  for (const ChoiceModelConfig& c : {ChoiceModelConfig::strict(), ChoiceModelConfig::weak(0.6)}) {
    OutcomeTable a(40, c.num_outcomes()), b(40, c.num_outcomes());
    for (int m = 0; m < 40; ++m) {
      const double r0 = u(rng), r1 = u(rng), k = shift(rng);
      a.fill_row(m, r0, r1, c);
      b.fill_row(m, r0 + k, r1 + k, c);
    }
    EXPECT_NEAR(ig_objective(a), ig_objective(b), 1e-10);
    EXPECT_NEAR(vr_objective(a), vr_objective(b), 1e-9);
  }
}

TEST(OutcomeTable, ExtremeRewardsStayFinite) {
  OutcomeTable t(2, 3);
  t.fill_row(0, 1e6, -1e6, ChoiceModelConfig::weak(1.0));
  t.fill_row(1, -1e6, 1e6, ChoiceModelConfig::weak(1.0));
  EXPECT_NEAR(t.at(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(t.at(1, 1), 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(ig_objective(t)));
  EXPECT_NEAR(ig_objective(t), 1.0, 1e-9);
}

TEST(QueryCost, Examples) {
  const FeatureVector a(Eigen::Vector2d(1.0, 0.3)), b(Eigen::Vector2d(0.1, 0.2));
  EXPECT_NEAR(query_cost(a, b, {CostKind::kFeatureDominance, 0.0}), -0.8, 1e-12);
  const FeatureVector c(Eigen::Vector2d(0.5, -0.5)), z(Eigen::Vector2d(0.0, 0.0));
  EXPECT_NEAR(query_cost(c, z, {CostKind::kFeatureDominance, 0.37}), 0.37, 1e-15);
  EXPECT_EQ(query_cost(a, b, {CostKind::kConstant, 0.1}), 0.1);
  const FeatureVector one(Eigen::VectorXd::Ones(1));
  EXPECT_THROW(query_cost(one, one, {CostKind::kFeatureDominance, 0.0}), std::invalid_argument);
}

TEST(Candidates, ExhaustiveAndExcluded) {
  std::mt19937_64 rng(6);
  const QueryPool pool = pool_of(random_features(10, 2, 1.0, rng));
  SelectionOptions opts;
  EXPECT_EQ(enumerate_candidates(pool, opts).size(), 45u);
  opts.excluded = {{0, 1}, {3, 7}};
  const auto c = enumerate_candidates(pool, opts);
  EXPECT_EQ(c.size(), 43u);
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
  EXPECT_EQ(std::count(c.begin(), c.end(), IdPair{3, 7}), 0);
}

TEST(Candidates, SampledBeyondLimit) {
  std::mt19937_64 rng(7);
  const QueryPool pool = pool_of(random_features(1500, 2, 1.0, rng));
  SelectionOptions opts;
  opts.sampled_pairs = 2000;
  opts.seed = 99;
  const auto a = enumerate_candidates(pool, opts);
  EXPECT_LE(a.size(), 2000u);
  EXPECT_GT(a.size(), 1900u);
  for (const auto& [i, j] : a) EXPECT_LT(i, j);
  EXPECT_EQ(a, enumerate_candidates(pool, opts));
  opts.seed = 100;
  EXPECT_NE(a, enumerate_candidates(pool, opts));
}

TEST(SelectQuery, ExhaustiveOracleOnSmallPools) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = trial < 10 ? 3 : 12;
    const QueryPool pool = pool_of(random_features(n, 3, 2.0, rng));
    const SampleSet s = random_samples(40, 3, rng);
    for (Strategy strategy : {Strategy::kInfoGain, Strategy::kVolumeRemoval}) {
      SelectionOptions opts;
      opts.strategy = strategy;
      opts.choice = trial % 2 ? ChoiceModelConfig::weak(1.0) : ChoiceModelConfig::strict();
      const QueryDecision d = select_query(pool, s, opts);
      double best = strategy == Strategy::kInfoGain ? -INFINITY : INFINITY;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const Query q{{i, j}, false};
          best = strategy == Strategy::kInfoGain
                     ? std::max(best, ig_objective(q, pool, s, opts.choice))
                     : std::min(best, vr_objective(q, pool, s, opts.choice));
        }
      }
      EXPECT_NEAR(d.objective_value, best, 1e-12);
      EXPECT_EQ(d.query.allow_about_equal, opts.choice.kind == ChoiceKind::kWeak);
    }
  }
}

TEST(SelectQuery, InfoGainAvoidsInjectedTrivialQuery) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const QueryPool pool = pool_of(random_features(6, 4, 1.5, rng));
    const SampleSet s = random_samples(50, 4, rng);
    SelectionOptions opts;
    std::vector<IdPair> cands{{0, 0}};
    for (int i = 0; i < 6; ++i) {
      for (int j = i + 1; j < 6; ++j) cands.emplace_back(i, j);
    }
    opts.candidates = cands;
    const QueryDecision ig = select_query(pool, s, opts);
    EXPECT_NE(ig.query.ids, (IdPair{0, 0}));
    opts.strategy = Strategy::kVolumeRemoval;
    const QueryDecision vr = select_query(pool, s, opts);
    // Volume removal's minimum is the trivial query.
    EXPECT_EQ(vr.query.ids, (IdPair{0, 0}));
    EXPECT_NEAR(vr.objective_value, 50.0 * 50.0 / 2.0, 1e-9);
  }
}

TEST(SelectQuery, TiesGoToSmallestPair) {
  const QueryPool pool = pool_of(std::vector<Eigen::VectorXd>(5, Eigen::Vector2d(0.4, 0.4)));
  std::mt19937_64 rng(10);
  const SampleSet s = random_samples(10, 2, rng);
  for (Strategy strategy : {Strategy::kInfoGain, Strategy::kVolumeRemoval}) {
    SelectionOptions opts;
    opts.strategy = strategy;
    opts.excluded = {{0, 1}};
    EXPECT_EQ(select_query(pool, s, opts).query.ids, (IdPair{0, 2}));
  }
}

TEST(SelectQuery, ConstantCostArgmaxInvariantAndStopRule) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const QueryPool pool = pool_of(random_features(15, 3, 2.0, rng));
    const SampleSet s = random_samples(30, 3, rng);
    SelectionOptions opts;
    opts.choice = ChoiceModelConfig::weak(1.0);
    const QueryDecision free = select_query(pool, s, opts);
    EXPECT_FALSE(free.stop);
    for (double eps : {0.05, 0.3, 0.9, 2.0}) {
      opts.cost = {CostKind::kConstant, eps};
      const QueryDecision d = select_query(pool, s, opts);
      EXPECT_EQ(d.query.ids, free.query.ids);
      EXPECT_NEAR(d.net_value, free.info_bits - eps, 1e-15);
      EXPECT_EQ(d.stop, free.info_bits - eps < 0.0);
    }
    opts.cost = {CostKind::kConstant, std::log2(3.0) + 1e-9};
    EXPECT_TRUE(select_query(pool, s, opts).stop);
  }
}

TEST(SelectQuery, FeatureDominanceStopIffBestNetNegative) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const QueryPool pool = pool_of(random_features(8, 3, 1.0, rng));
    const SampleSet s = random_samples(30, 3, rng);
    SelectionOptions opts;
    opts.cost = {CostKind::kFeatureDominance, 0.2 * trial};
    double best = -INFINITY;
    for (int i = 0; i < 8; ++i) {
      for (int j = i + 1; j < 8; ++j) {
        const Query q{{i, j}, false};
        best = std::max(best, ig_objective(q, pool, s, opts.choice) - query_cost(q, pool, opts.cost));
      }
    }
    const QueryDecision d = select_query(pool, s, opts);
    EXPECT_NEAR(d.net_value, best, 1e-12);
    EXPECT_EQ(d.stop, best < 0.0);
  }
}

TEST(SelectQuery, RandomStrategyNeverStops) {
  std::mt19937_64 rng(13);
  const QueryPool pool = pool_of(random_features(20, 2, 1.0, rng));
  const SampleSet s = random_samples(10, 2, rng);
  SelectionOptions opts;
  opts.strategy = Strategy::kRandom;
  opts.cost = {CostKind::kConstant, 10.0};
  opts.seed = 4;
  const QueryDecision a = select_query(pool, s, opts);
  EXPECT_FALSE(a.stop);
  EXPECT_EQ(a.query.ids, select_query(pool, s, opts).query.ids);
}

TEST(SelectQuery, Errors) {
  std::mt19937_64 rng(14);
  const SampleSet s = random_samples(10, 2, rng);
  EXPECT_THROW(select_query(pool_of({kZero}), s, {}), std::invalid_argument);
  SelectionOptions opts;
  opts.candidates = std::vector<IdPair>{};
  EXPECT_THROW(select_query(pool_of({kZero, kBig}), s, opts), std::invalid_argument);
}

TEST(EpsilonFromTrace, PlateauExample) {
  const std::vector<double> m{0.0, 0.5, 0.51, 0.515, 0.52};
  const std::vector<double> values{0.30, 0.12, 0.11, 0.05};
  EXPECT_DOUBLE_EQ(*epsilon_from_trace(m, values), 0.11);
  EXPECT_FALSE(epsilon_from_trace({0.0, 0.1, 0.2, 0.3}, {1, 1, 1}).has_value());
  EXPECT_THROW(epsilon_from_trace({0.0, 0.1}, {1, 1}), std::invalid_argument);
}

}  // namespace
}  // namespace prefwise
