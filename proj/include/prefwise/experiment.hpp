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

#ifndef PREFWISE_EXPERIMENT_HPP_
#define PREFWISE_EXPERIMENT_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "prefwise/belief.hpp"
#include "prefwise/choice_model.hpp"
#include "prefwise/environment.hpp"
#include "prefwise/query.hpp"
#include "prefwise/reward.hpp"
#include "prefwise/stats.hpp"

namespace prefwise {

enum class DemoPlacement { kBeforeQueries, kAfterEachQuery, kNone };
enum class AboutEqualHandling { kUse, kIgnoreAndDiscard };

std::string to_string(DemoPlacement placement);
DemoPlacement demo_placement_from_string(const std::string& name);
std::string to_string(AboutEqualHandling handling);
AboutEqualHandling about_equal_handling_from_string(const std::string& name);

/// One simulated elicitation session on a fixed pool.
struct SessionConfig {
  Strategy strategy = Strategy::kInfoGain;
  /// Model the learner assumes.
  ChoiceModelConfig choice;
  /// Model the simulated user answers with; defaults to `choice`. Must be of
  /// the same kind, but may use a different delta or beta.
  std::optional<ChoiceModelConfig> user_choice;

  int n_demos = 0;
  DemoPlacement placement = DemoPlacement::kNone;
  DemoMethod demo_method = DemoMethod::kPoolArgmax;
  double demo_beta = 0.2;

  int n_queries = 15;
  CostSpec cost;
  /// When false the loop keeps asking after the stop rule fires and only
  /// records the flag.
  bool enforce_stop = true;

  int num_samples = 100;
  MhConfig mh;
  /// Infer delta jointly with the weights (weak models only).
  std::optional<DeltaPrior> joint_delta;
  AboutEqualHandling about_equal = AboutEqualHandling::kUse;
  bool record_alignment = true;

  std::uint64_t chain_seed = 1;
  std::uint64_t user_seed = 2;
  std::uint64_t selection_seed = 3;
  std::size_t exhaustive_limit = 1000;
  std::size_t sampled_pairs = 50000;

  const ChoiceModelConfig& user_model() const {
    return user_choice ? *user_choice : choice;
  }
  void validate() const;
};

struct SimulatedAnswer {
  Outcome outcome = Outcome::choice(0);
  /// The chosen option has strictly lower true reward than the other.
  bool wrong_answer = false;
};

/// Samples the answer of a user with weights `true_params`.
SimulatedAnswer simulated_user_answer(const RewardParams& true_params,
                                      const Query& query, const QueryPool& pool,
                                      const ChoiceModelConfig& config,
                                      std::mt19937_64& rng);

struct QueryRecord {
  int query_index = 0;  // 1-based
  IdPair ids{0, 0};
  double objective_value = 0.0;
  double info_bits = 0.0;
  double cost = 0.0;
  double net_value = 0.0;
  Outcome outcome = Outcome::choice(0);
  /// Alignment after the answer; NaN when not recorded.
  double alignment = 0.0;
  bool wrong_answer = false;
  bool about_equal = false;
  /// The stop rule fired at this decision (only recorded when not enforced).
  bool stop = false;
};

struct SessionTrace {
  /// Alignment before the first query (after any up-front demos).
  double initial_alignment = 0.0;
  std::vector<QueryRecord> records;
  /// Belief used for alignment, including every demo.
  std::optional<BeliefDefinition> belief;
  SampleSet final_samples;
  bool stopped = false;
  /// Set when a component failed; records hold everything up to the failure.
  std::string error;

  int wrong_answers() const;
  int about_equal_answers() const;
};

/// Runs the demo-then-query loop against a simulated user. `true_params`
/// must match the pool's feature dimension.
SessionTrace run_session(const QueryPool& pool, const SessionConfig& config,
                         const RewardParams& true_params);

/// Averages `epsilon_from_trace` over info-gain sessions run at epsilon = 0.
/// The cost kind of `config` is kept. Throws when no session plateaus.
struct EpsilonCalibration {
  double epsilon = 0.0;
  int converged = 0;
  int users = 0;
};
EpsilonCalibration calibrate_epsilon(const QueryPool& pool,
                                     const SessionConfig& config,
                                     const std::vector<RewardParams>& users,
                                     std::uint64_t seed, double window = 0.02);

/// Uniform draw on the unit sphere.
RewardParams random_true_params(int dim, std::uint64_t seed);

const std::vector<std::string>& experiment_ids();

struct ExperimentSpec {
  std::string id;
  EnvKind env = EnvKind::kLds;
  int n_users = 30;
  int n_queries = 15;
  int pool_size = 10000;
  std::uint64_t seed = 0;
  /// Used instead of generating a pool when set.
  std::optional<QueryPool> pool;
  int num_samples = 100;
  MhConfig mh;
  std::size_t sampled_pairs = 50000;
  /// Query index of the paired tests; the final query when unset.
  std::optional<int> test_query_index;
  /// Users spent on epsilon calibration before stopping studies.
  int calibration_users = 10;
  int threads = 1;
};

struct ArmSpec {
  std::string name;
  SessionConfig config;
};

/// Arms of an experiment with user-independent fields filled in.
std::vector<ArmSpec> experiment_arms(const ExperimentSpec& spec);

struct CsvRow {
  int run_id = 0;
  std::string arm;
  std::string strategy;
  int n_demos = 0;
  QueryRecord record;
};

struct Comparison {
  std::string arm_a;
  std::string arm_b;
  int query_index = 0;
  Summary a;
  Summary b;
  PairedTest test;
};

/// Outcome of a stopping study arm.
struct StoppingStats {
  std::string arm;
  double epsilon = 0.0;
  int calibration_converged = 0;
  /// Mean over users of the cumulative (info bits - cost) over the queries
  /// asked before the stop rule first fires.
  double mean_at_stop = 0.0;
  /// Mean over users of the best cumulative value over any prefix.
  double mean_hindsight_max = 0.0;
  double mean_stop_index = 0.0;
  double ratio() const {
    return mean_hindsight_max == 0.0 ? 1.0 : mean_at_stop / mean_hindsight_max;
  }
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<std::string> arms;
  std::vector<std::string> strategies;
  std::vector<int> n_demos;
  /// traces[arm][user].
  std::vector<std::vector<SessionTrace>> traces;
  std::vector<Comparison> comparisons;
  std::vector<StoppingStats> stopping;

  std::vector<CsvRow> rows() const;
  /// Per-query alignment values of one arm, one per user that reached it.
  std::vector<double> alignments_at(std::size_t arm, int query_index) const;
  std::vector<double> wrong_answer_counts(std::size_t arm) const;
  std::size_t arm_index(const std::string& name) const;

  std::string to_csv() const;
  /// arm, query_index, n, mean_alignment, se_alignment.
  std::string summary_csv() const;
  /// Human-readable comparisons and stopping statistics.
  std::string report() const;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

}  // namespace prefwise

#endif  // PREFWISE_EXPERIMENT_HPP_
