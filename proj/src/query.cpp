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

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace prefwise {

std::string to_string(CostKind kind) {
  return kind == CostKind::kFeatureDominance ? "feature_dominance" : "constant";
}

CostKind cost_kind_from_string(const std::string& name) {
  if (name == "constant") return CostKind::kConstant;
  if (name == "feature_dominance") return CostKind::kFeatureDominance;
  throw std::invalid_argument("unknown cost kind '" + name +
                              "' (expected constant or feature_dominance)");
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kVolumeRemoval: return "volume_removal";
    case Strategy::kInfoGain: return "info_gain";
    case Strategy::kRandom: return "random";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "volume_removal") return Strategy::kVolumeRemoval;
  if (name == "info_gain") return Strategy::kInfoGain;
  if (name == "random") return Strategy::kRandom;
  throw std::invalid_argument("unknown strategy '" + name +
                              "' (expected volume_removal, info_gain or random)");
}

OutcomeTable::OutcomeTable(int num_samples, int num_outcomes)
    : num_samples_(num_samples),
      num_outcomes_(num_outcomes),
      probs_(static_cast<std::size_t>(num_samples) * num_outcomes, 0.0) {
  if (num_samples < 2) throw std::invalid_argument("need at least 2 samples");
  if (num_outcomes < 2) throw std::invalid_argument("need at least 2 outcomes");
}

void OutcomeTable::fill_row(int sample, double reward0, double reward1,
                            const ChoiceModelConfig& config) {
  double* row = &probs_[sample * num_outcomes_];
  // exp(+-709) is the edge of double range; beyond it the answer is certain.
  const double x =
      std::clamp(config.beta * reward0 - config.beta * reward1, -700.0, 700.0);
  const double e = std::exp(-x);
  if (config.kind == ChoiceKind::kStrict) {
    row[0] = 1.0 / (1.0 + e);
    row[1] = e / (1.0 + e);
    return;
  }
  if (config.delta != cached_delta_) {
    cached_delta_ = config.delta;
    cached_exp_delta_ = std::exp(config.delta);
    cached_expm1_2delta_ = std::expm1(2.0 * config.delta);
  }
  row[0] = 1.0 / (1.0 + cached_exp_delta_ * e);
  row[1] = 1.0 / (1.0 + cached_exp_delta_ / e);
  row[2] = cached_expm1_2delta_ * row[0] * row[1];
}

OutcomeTable build_outcome_table(const FeatureVector& a, const FeatureVector& b,
                                 const SampleSet& samples,
                                 const ChoiceModelConfig& config) {
  config.validate();
  const int m = static_cast<int>(samples.size());
  OutcomeTable table(m, config.num_outcomes());
  ChoiceModelConfig per_sample = config;
  for (int i = 0; i < m; ++i) {
    if (samples.is_joint()) per_sample.delta = samples.deltas[i];
    table.fill_row(i, samples.samples[i].dot(a.values()),
                   samples.samples[i].dot(b.values()), per_sample);
  }
  return table;
}

double vr_objective(const OutcomeTable& table) {
  double total = 0.0;
  for (int q = 0; q < table.num_outcomes(); ++q) {
    double mass = 0.0;
    for (int m = 0; m < table.num_samples(); ++m) mass += table.at(m, q);
    total += mass * mass;
  }
  return total;
}

double ig_objective(const OutcomeTable& table) {
  const double m_count = static_cast<double>(table.num_samples());
  double total = 0.0;
  for (int q = 0; q < table.num_outcomes(); ++q) {
    double mass = 0.0;
    for (int m = 0; m < table.num_samples(); ++m) mass += table.at(m, q);
    if (mass < 1e-300) continue;
    for (int m = 0; m < table.num_samples(); ++m) {
      const double p = table.at(m, q);
      if (p > 0.0) total += p * std::log2(m_count * p / mass);
    }
  }
  return std::max(0.0, total / m_count);
}

double vr_objective(const Query& query, const QueryPool& pool,
                    const SampleSet& samples, const ChoiceModelConfig& config) {
  return vr_objective(build_outcome_table(pool.features(query.ids.first),
                                          pool.features(query.ids.second),
                                          samples, config));
}

double ig_objective(const Query& query, const QueryPool& pool,
                    const SampleSet& samples, const ChoiceModelConfig& config) {
  return ig_objective(build_outcome_table(pool.features(query.ids.first),
                                          pool.features(query.ids.second),
                                          samples, config));
}

double query_cost(const FeatureVector& a, const FeatureVector& b,
                  const CostSpec& cost) {
  if (cost.kind == CostKind::kConstant) return cost.epsilon;
  if (a.dim() < 2) {
    throw std::invalid_argument("feature-dominance cost needs at least 2 features");
  }
  if (a.dim() != b.dim()) throw std::invalid_argument("feature dimension mismatch");
  const Eigen::VectorXd gap = (a.values() - b.values()).cwiseAbs();
  Eigen::Index dominant = 0;
  gap.maxCoeff(&dominant);  // first maximal index
  double runner_up = 0.0;
  for (Eigen::Index j = 0; j < gap.size(); ++j) {
    if (j != dominant) runner_up = std::max(runner_up, gap[j]);
  }
  return cost.epsilon - gap[dominant] + runner_up;
}

double query_cost(const Query& query, const QueryPool& pool,
                  const CostSpec& cost) {
  return query_cost(pool.features(query.ids.first),
                    pool.features(query.ids.second), cost);
}

namespace {

IdPair canonical(IdPair p) {
  if (p.first > p.second) std::swap(p.first, p.second);
  return p;
}

}  // namespace

std::vector<IdPair> enumerate_candidates(const QueryPool& pool,
                                         const SelectionOptions& options) {
  const int n = static_cast<int>(pool.size());
  if (n < 2) throw std::invalid_argument("pool needs at least 2 entries");
  std::vector<IdPair> out;
  if (options.candidates) {
    for (const IdPair& p : *options.candidates) {
      if (p.first < 0 || p.first >= n || p.second < 0 || p.second >= n) {
        throw std::out_of_range("candidate pair references a missing pool entry");
      }
      if (!options.excluded.contains(canonical(p))) out.push_back(p);
    }
  } else if (static_cast<std::size_t>(n) <= options.exhaustive_limit) {
    out.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (!options.excluded.contains({i, j})) out.emplace_back(i, j);
      }
    }
  } else {
    std::mt19937_64 rng(options.candidate_seed.value_or(options.seed));
    std::uniform_int_distribution<int> first(0, n - 1);
    std::uniform_int_distribution<int> second(0, n - 2);
    out.reserve(options.sampled_pairs);
    for (std::size_t k = 0; k < options.sampled_pairs; ++k) {
      const int i = first(rng);
      int j = second(rng);
      if (j >= i) ++j;
      const IdPair p = canonical({i, j});
      if (!options.excluded.contains(p)) out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

QueryDecision select_query(const QueryPool& pool, const SampleSet& samples,
                           const SelectionOptions& options) {
  options.choice.validate();
  const std::vector<IdPair> candidates = enumerate_candidates(pool, options);
  if (candidates.empty()) throw std::invalid_argument("no candidate queries left");

  const int m = static_cast<int>(samples.size());
  const bool weak = options.choice.kind == ChoiceKind::kWeak;
  auto decision_for = [&](const IdPair& ids, const OutcomeTable& table) {
    QueryDecision d;
    d.query.ids = ids;
    d.query.allow_about_equal = weak;
    d.info_bits = ig_objective(table);
    d.cost = query_cost(pool.features(ids.first), pool.features(ids.second),
                        options.cost);
    d.net_value = d.info_bits - d.cost;
    d.objective_value = options.strategy == Strategy::kVolumeRemoval
                            ? vr_objective(table)
                            : d.info_bits;
    d.stop = options.strategy == Strategy::kInfoGain && d.net_value < 0.0;
    return d;
  };

  if (options.strategy == Strategy::kRandom) {
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const IdPair ids = candidates[pick(rng)];
    return decision_for(ids, build_outcome_table(pool.features(ids.first),
                                                 pool.features(ids.second),
                                                 samples, options.choice));
  }

  // Rewards of every referenced entry under every sample, entry-major.
  std::vector<char> used(pool.size(), 0);
  for (const IdPair& p : candidates) used[p.first] = used[p.second] = 1;
  std::vector<double> rewards(pool.size() * m, 0.0);
  for (std::size_t e = 0; e < pool.size(); ++e) {
    if (!used[e]) continue;
    const Eigen::VectorXd& f = pool.entries[e].features.values();
    for (int s = 0; s < m; ++s) rewards[e * m + s] = samples.samples[s].dot(f);
  }

  OutcomeTable table(m, options.choice.num_outcomes());
  ChoiceModelConfig per_sample = options.choice;
  const bool constant_cost = options.cost.kind == CostKind::kConstant;
  std::size_t best = 0;
  double best_key = 0.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto [a, b] = candidates[c];
    for (int s = 0; s < m; ++s) {
      if (samples.is_joint()) per_sample.delta = samples.deltas[s];
      table.fill_row(s, rewards[a * m + s], rewards[b * m + s], per_sample);
    }
    double key;
    if (options.strategy == Strategy::kVolumeRemoval) {
      key = -vr_objective(table);
    } else {
      key = ig_objective(table);
      if (!constant_cost) {
        key -= query_cost(pool.features(a), pool.features(b), options.cost);
      }
    }
    if (c == 0 || key > best_key) {
      best_key = key;
      best = c;
    }
  }
  const IdPair ids = candidates[best];
  return decision_for(ids, build_outcome_table(pool.features(ids.first),
                                               pool.features(ids.second),
                                               samples, options.choice));
}

std::optional<double> epsilon_from_trace(const std::vector<double>& alignments,
                                         const std::vector<double>& zero_cost_values,
                                         double window) {
  if (alignments.size() != zero_cost_values.size() + 1) {
    throw std::invalid_argument(
        "need one more alignment value than query objective values");
  }
  for (std::size_t i = 2; i < alignments.size(); ++i) {
    const auto [lo, hi] =
        std::minmax({alignments[i - 2], alignments[i - 1], alignments[i]});
    if (hi - lo <= window + 1e-12) return zero_cost_values[i - 1];
  }
  return std::nullopt;
}

}  // namespace prefwise
