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

#ifndef PREFWISE_BELIEF_HPP_
#define PREFWISE_BELIEF_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "prefwise/choice_model.hpp"
#include "prefwise/reward.hpp"

namespace prefwise {

/// One answered preference query, stored by value so later edits to a pool
/// cannot change the belief.
struct PreferenceTerm {
  FeatureVector first;
  FeatureVector second;
  Outcome outcome = Outcome::choice(0);
  ChoiceModelConfig model;
};

/// Uniform prior interval for the minimum perceivable difference when it is
/// inferred jointly with the weights.
struct DeltaPrior {
  double lower = 0.0;
  double upper = 2.0;
};

/// Declarative log-posterior over reward weights: uniform prior on the unit
/// ball, Boltzmann demonstration terms and preference likelihood terms.
/// Both term lists are append-only.
class BeliefDefinition {
 public:
  explicit BeliefDefinition(int feature_dim, double demo_beta = 0.02,
                            std::optional<DeltaPrior> joint_delta = {});

  int feature_dim() const { return feature_dim_; }
  double demo_beta() const { return demo_beta_; }
  const std::vector<FeatureVector>& demos() const { return demos_; }
  const std::vector<PreferenceTerm>& history() const { return history_; }
  bool is_joint() const { return joint_delta_.has_value(); }
  const std::optional<DeltaPrior>& joint_delta() const { return joint_delta_; }

  /// Sum of demonstration features, cached so the demo term is one dot product.
  const Eigen::VectorXd& demo_feature_sum() const { return demo_sum_; }

  void add_demo(FeatureVector features);
  void add_preference(PreferenceTerm term);

 private:
  int feature_dim_;
  double demo_beta_;
  std::optional<DeltaPrior> joint_delta_;
  std::vector<FeatureVector> demos_;
  std::vector<PreferenceTerm> history_;
  Eigen::VectorXd demo_sum_;
};

/// log b(omega) up to a constant; -infinity outside the unit ball.
double log_unnormalized_posterior(const BeliefDefinition& def,
                                  const Eigen::VectorXd& weights);

/// Joint (omega, delta) form: weak preference terms use `delta` in place of
/// their configured value. Throws if `def` is not joint.
double log_unnormalized_posterior(const BeliefDefinition& def,
                                  const Eigen::VectorXd& weights, double delta);

struct MhConfig {
  double proposal_scale = 0.1;
  int burn_in = 2000;
  int thin = 50;
};

/// Materialized belief: M weight samples (plus one delta per sample under
/// joint inference).
struct SampleSet {
  std::vector<Eigen::VectorXd> samples;
  std::vector<double> deltas;
  std::uint64_t seed = 0;
  MhConfig mh;
  double acceptance_rate = 0.0;

  std::size_t size() const { return samples.size(); }
  bool is_joint() const { return !deltas.empty(); }
  Eigen::VectorXd mean() const;
};

/// Where a chain starts; defaults to the origin (and the prior's midpoint for
/// delta).
struct ChainStart {
  Eigen::VectorXd weights;
  double delta = 0.0;
};

/// Random-walk Metropolis-Hastings over the unit ball (times the delta
/// interval for joint definitions). Proposals outside the support are
/// rejected. Deterministic for a given seed.
SampleSet sample_posterior(const BeliefDefinition& def, int num_samples,
                           std::uint64_t seed, const MhConfig& mh = {},
                           const std::optional<ChainStart>& start = {});

/// Same sampler over an arbitrary log-density on the unit ball.
using LogDensity = std::function<double(const Eigen::VectorXd&)>;
SampleSet sample_log_density(const LogDensity& log_density, int dim,
                             int num_samples, std::uint64_t seed,
                             const MhConfig& mh = {},
                             const std::optional<ChainStart>& start = {});

/// Normalized posterior weights on a regular grid restricted to the ball.
struct GridPosterior {
  int dim = 0;
  int resolution = 0;
  std::vector<Eigen::VectorXd> points;
  std::vector<double> weights;
  /// marginals[i][k]: mass of cells whose i-th coordinate is grid value k.
  std::vector<std::vector<double>> marginals;

  Eigen::VectorXd mean() const;
  std::size_t argmax() const;
  static double axis_value(int k, int resolution);
};

/// Exhaustive evaluation on a resolution^d grid over [-1, 1]^d. For d <= 3.
GridPosterior brute_force_posterior(const BeliefDefinition& def,
                                    int resolution);

/// Mean cosine similarity between the samples and the true weights.
double alignment(const SampleSet& samples, const RewardParams& true_params);
double alignment(const std::vector<Eigen::VectorXd>& samples,
                 const Eigen::VectorXd& true_weights);

}  // namespace prefwise

#endif  // PREFWISE_BELIEF_HPP_
