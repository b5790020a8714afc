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

#ifndef PREFWISE_QUERY_HPP_
#define PREFWISE_QUERY_HPP_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "prefwise/belief.hpp"
#include "prefwise/choice_model.hpp"
#include "prefwise/environment.hpp"

namespace prefwise {

using IdPair = std::pair<int, int>;

/// Ordered pair of pool entries shown to the user; option A is `ids.first`.
struct Query {
  IdPair ids{0, 0};
  bool allow_about_equal = false;
};

enum class CostKind { kConstant, kFeatureDominance };

struct CostSpec {
  CostKind kind = CostKind::kConstant;
  double epsilon = 0.0;
};

std::string to_string(CostKind kind);
CostKind cost_kind_from_string(const std::string& name);

enum class Strategy { kVolumeRemoval, kInfoGain, kRandom };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& name);

struct QueryDecision {
  Query query;
  /// Strategy objective: bits for info gain and random, the (minimized)
  /// volume-removal sum for volume removal.
  double objective_value = 0.0;
  /// Information gain of the chosen query in bits, whatever the strategy.
  double info_bits = 0.0;
  double cost = 0.0;
  /// info_bits - cost.
  double net_value = 0.0;
  bool stop = false;
};

/// Per-sample outcome probabilities of one two-option query, row-major
/// (sample, outcome). Outcomes follow (Choice(0), Choice(1)[, AboutEqual]).
class OutcomeTable {
 public:
  OutcomeTable(int num_samples, int num_outcomes);

  int num_samples() const { return num_samples_; }
  int num_outcomes() const { return num_outcomes_; }
  double& at(int sample, int outcome) { return probs_[sample * num_outcomes_ + outcome]; }
  double at(int sample, int outcome) const {
    return probs_[sample * num_outcomes_ + outcome];
  }

  /// Fills row `sample` from the rewards of both options.
  void fill_row(int sample, double reward0, double reward1,
                const ChoiceModelConfig& config);

 private:
  int num_samples_;
  int num_outcomes_;
  std::vector<double> probs_;
  double cached_delta_ = 0.0;
  double cached_exp_delta_ = 1.0;
  double cached_expm1_2delta_ = 0.0;
};

/// Outcome table for options with features (a, b) under every sample. Joint
/// sample sets supply their own delta to weak models.
OutcomeTable build_outcome_table(const FeatureVector& a, const FeatureVector& b,
                                 const SampleSet& samples,
                                 const ChoiceModelConfig& config);

/// Sum over outcomes of (sum over samples of P)^2; lower removes more volume.
double vr_objective(const OutcomeTable& table);
double vr_objective(const Query& query, const QueryPool& pool,
                    const SampleSet& samples, const ChoiceModelConfig& config);

/// Sample estimate of the mutual information between the answer and the
/// weights, in bits. Clamped at zero against rounding.
double ig_objective(const OutcomeTable& table);
double ig_objective(const Query& query, const QueryPool& pool,
                    const SampleSet& samples, const ChoiceModelConfig& config);

double query_cost(const FeatureVector& a, const FeatureVector& b,
                  const CostSpec& cost);
double query_cost(const Query& query, const QueryPool& pool,
                  const CostSpec& cost);

struct SelectionOptions {
  Strategy strategy = Strategy::kInfoGain;
  ChoiceModelConfig choice;
  CostSpec cost;
  /// Explicit candidates; when absent the pool is enumerated (all unordered
  /// pairs up to `exhaustive_limit` entries, otherwise `sampled_pairs`
  /// seeded random pairs).
  std::optional<std::vector<IdPair>> candidates;
  /// Pairs already asked in this session (stored with first < second).
  std::set<IdPair> excluded;
  std::size_t exhaustive_limit = 1000;
  std::size_t sampled_pairs = 50000;
  /// Seed of the random strategy's pick.
  std::uint64_t seed = 0;
  /// Seed of the pair subsample; `seed` when absent. Sessions keep it fixed
  /// so every iteration scans the same pairs.
  std::optional<std::uint64_t> candidate_seed;
};

/// Candidate pairs as they would be scanned by select_query.
std::vector<IdPair> enumerate_candidates(const QueryPool& pool,
                                         const SelectionOptions& options);

/// Picks the next query. Info gain maximizes info_bits - cost and sets `stop`
/// when that maximum is negative; volume removal minimizes its objective and
/// never stops; random draws a candidate uniformly. Ties go to the
/// lexicographically smallest pair.
QueryDecision select_query(const QueryPool& pool, const SampleSet& samples,
                           const SelectionOptions& options);

/// Epsilon at which a trace's net objective is zero at the first query i
/// with alignments m_i, m_{i-1}, m_{i-2} inside a window of width
/// `window`. `alignments[0]` is the prior alignment and `alignments[k]`
/// follows the k-th answer; `zero_cost_values[k - 1]` is the k-th query's
/// info gain minus its cost at epsilon = 0. Empty when no plateau occurs.
std::optional<double> epsilon_from_trace(const std::vector<double>& alignments,
                                         const std::vector<double>& zero_cost_values,
                                         double window = 0.02);

}  // namespace prefwise

#endif  // PREFWISE_QUERY_HPP_
