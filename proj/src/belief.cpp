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

#include "prefwise/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace prefwise {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kBallSlack = 1e-12;

bool in_ball(const Eigen::VectorXd& w) {
  return w.squaredNorm() <= 1.0 + kBallSlack;
}

double preference_terms(const BeliefDefinition& def, const Eigen::VectorXd& w,
                        const double* delta_override) {
  double total = 0.0;
  for (const PreferenceTerm& term : def.history()) {
    const std::array<double, 2> rewards{w.dot(term.first.values()),
                                        w.dot(term.second.values())};
    ChoiceModelConfig model = term.model;
    if (delta_override != nullptr && model.kind == ChoiceKind::kWeak) {
      model.delta = *delta_override;
    }
    total += outcome_log_likelihood(term.outcome, rewards, model);
  }
  return total;
}

void check_dim(const BeliefDefinition& def, const Eigen::VectorXd& w) {
  if (w.size() != def.feature_dim()) {
    throw std::invalid_argument(
        "weights have dimension " + std::to_string(w.size()) +
        ", belief expects " + std::to_string(def.feature_dim()));
  }
}

}  // namespace

BeliefDefinition::BeliefDefinition(int feature_dim, double demo_beta,
                                   std::optional<DeltaPrior> joint_delta)
    : feature_dim_(feature_dim),
      demo_beta_(demo_beta),
      joint_delta_(joint_delta),
      demo_sum_(Eigen::VectorXd::Zero(feature_dim)) {
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (!(demo_beta >= 0.0)) throw std::invalid_argument("demo_beta must be >= 0");
  if (joint_delta && !(joint_delta->lower >= 0.0 &&
                       joint_delta->upper > joint_delta->lower)) {
    throw std::invalid_argument("delta prior must satisfy 0 <= lower < upper");
  }
}

void BeliefDefinition::add_demo(FeatureVector features) {
  if (features.dim() != feature_dim_) {
    throw std::invalid_argument("demo features have dimension " +
                                std::to_string(features.dim()) +
                                ", belief expects " +
                                std::to_string(feature_dim_));
  }
  demo_sum_ += features.values();
  demos_.push_back(std::move(features));
}

void BeliefDefinition::add_preference(PreferenceTerm term) {
  if (term.first.dim() != feature_dim_ || term.second.dim() != feature_dim_) {
    throw std::invalid_argument("query features do not match belief dimension");
  }
  term.model.validate();
  if (term.outcome.is_about_equal()) {
    if (term.model.kind != ChoiceKind::kWeak) {
      throw std::invalid_argument("About Equal answer under a strict model");
    }
    if (term.model.delta == 0.0 && !is_joint()) {
      throw std::invalid_argument("About Equal answer with delta = 0");
    }
  }
  history_.push_back(std::move(term));
}

double log_unnormalized_posterior(const BeliefDefinition& def,
                                  const Eigen::VectorXd& weights) {
  check_dim(def, weights);
  if (!in_ball(weights)) return kNegInf;
  return def.demo_beta() * weights.dot(def.demo_feature_sum()) +
         preference_terms(def, weights, nullptr);
}

double log_unnormalized_posterior(const BeliefDefinition& def,
                                  const Eigen::VectorXd& weights,
                                  double delta) {
  if (!def.is_joint()) {
    throw std::invalid_argument(
        "joint (weights, delta) evaluation on a belief without a delta prior");
  }
  check_dim(def, weights);
  const DeltaPrior& prior = *def.joint_delta();
  if (!in_ball(weights) || delta < prior.lower || delta > prior.upper) {
    return kNegInf;
  }
  // delta == 0 gives About Equal terms zero likelihood.
  if (delta == 0.0) {
    for (const PreferenceTerm& t : def.history()) {
      if (t.outcome.is_about_equal()) return kNegInf;
    }
  }
  return def.demo_beta() * weights.dot(def.demo_feature_sum()) +
         preference_terms(def, weights, &delta);
}

Eigen::VectorXd SampleSet::mean() const {
  if (samples.empty()) throw std::logic_error("mean of an empty sample set");
  Eigen::VectorXd total = Eigen::VectorXd::Zero(samples.front().size());
  for (const auto& s : samples) total += s;
  return total / static_cast<double>(samples.size());
}

namespace {

struct ChainSpec {
  int dim;
  bool joint;
  std::function<double(const Eigen::VectorXd&, double)> log_density;
  double delta_start;
};

SampleSet run_chain(const ChainSpec& spec, int num_samples, std::uint64_t seed,
                    const MhConfig& mh, const std::optional<ChainStart>& start) {
  if (num_samples < 2) throw std::invalid_argument("need at least 2 samples");
  if (!(mh.proposal_scale > 0.0)) {
    throw std::invalid_argument("proposal scale must be > 0");
  }
  if (mh.burn_in < 0 || mh.thin < 1) {
    throw std::invalid_argument("burn-in must be >= 0 and thinning >= 1");
  }

  Eigen::VectorXd current = Eigen::VectorXd::Zero(spec.dim);
  double current_delta = spec.delta_start;
  if (start) {
    if (start->weights.size() != spec.dim) {
      throw std::invalid_argument("chain start has the wrong dimension");
    }
    current = start->weights;
    if (spec.joint) current_delta = start->delta;
  }
  double current_lp = spec.log_density(current, current_delta);
  if (!std::isfinite(current_lp)) {
    throw std::invalid_argument("chain start lies outside the support");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SampleSet out;
  out.seed = seed;
  out.mh = mh;
  out.samples.reserve(num_samples);
  if (spec.joint) out.deltas.reserve(num_samples);

  Eigen::VectorXd proposal(spec.dim);
  long accepted = 0;
  const long total_steps =
      static_cast<long>(mh.burn_in) + static_cast<long>(num_samples) * mh.thin;
  for (long step = 1; step <= total_steps; ++step) {
    for (int i = 0; i < spec.dim; ++i) {
      proposal[i] = current[i] + mh.proposal_scale * normal(rng);
    }
    double proposal_delta = current_delta;
    if (spec.joint) proposal_delta += mh.proposal_scale * normal(rng);
    const double log_u = std::log(unit(rng));
    const double proposal_lp = spec.log_density(proposal, proposal_delta);
    if (proposal_lp != kNegInf && log_u < proposal_lp - current_lp) {
      current = proposal;
      current_delta = proposal_delta;
      current_lp = proposal_lp;
      ++accepted;
    }
    if (step > mh.burn_in && (step - mh.burn_in) % mh.thin == 0) {
      out.samples.push_back(current);
      if (spec.joint) out.deltas.push_back(current_delta);
    }
  }
  out.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(total_steps);
  return out;
}

}  // namespace

SampleSet sample_posterior(const BeliefDefinition& def, int num_samples,
                           std::uint64_t seed, const MhConfig& mh,
                           const std::optional<ChainStart>& start) {
  ChainSpec spec;
  spec.dim = def.feature_dim();
  spec.joint = def.is_joint();
  if (spec.joint) {
    spec.delta_start =
        0.5 * (def.joint_delta()->lower + def.joint_delta()->upper);
    spec.log_density = [&def](const Eigen::VectorXd& w, double d) {
      return log_unnormalized_posterior(def, w, d);
    };
  } else {
    spec.delta_start = 0.0;
    spec.log_density = [&def](const Eigen::VectorXd& w, double) {
      return log_unnormalized_posterior(def, w);
    };
  }
  return run_chain(spec, num_samples, seed, mh, start);
}

SampleSet sample_log_density(const LogDensity& log_density, int dim,
                             int num_samples, std::uint64_t seed,
                             const MhConfig& mh,
                             const std::optional<ChainStart>& start) {
  ChainSpec spec;
  spec.dim = dim;
  spec.joint = false;
  spec.delta_start = 0.0;
  spec.log_density = [&log_density](const Eigen::VectorXd& w, double) {
    return in_ball(w) ? log_density(w) : kNegInf;
  };
  return run_chain(spec, num_samples, seed, mh, start);
}

double GridPosterior::axis_value(int k, int resolution) {
  return -1.0 + 2.0 * static_cast<double>(k) / (resolution - 1);
}

Eigen::VectorXd GridPosterior::mean() const {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    total += weights[i] * points[i];
  }
  return total;
}

std::size_t GridPosterior::argmax() const {
  return static_cast<std::size_t>(
      std::max_element(weights.begin(), weights.end()) - weights.begin());
}

GridPosterior brute_force_posterior(const BeliefDefinition& def,
                                    int resolution) {
  const int dim = def.feature_dim();
  if (dim > 3) {
    throw std::invalid_argument("grid oracle supports dimension <= 3, got " +
                                std::to_string(dim));
  }
  if (def.is_joint()) {
    throw std::invalid_argument("grid oracle does not support joint beliefs");
  }
  if (resolution < 2) throw std::invalid_argument("grid resolution must be >= 2");

  GridPosterior grid;
  grid.dim = dim;
  grid.resolution = resolution;
  std::vector<std::vector<int>> indices;
  std::vector<double> log_weights;

  std::vector<int> idx(dim, 0);
  Eigen::VectorXd point(dim);
  while (true) {
    for (int i = 0; i < dim; ++i) {
      point[i] = GridPosterior::axis_value(idx[i], resolution);
    }
    if (point.squaredNorm() <= 1.0 + kBallSlack) {
      grid.points.push_back(point);
      indices.push_back(idx);
      log_weights.push_back(log_unnormalized_posterior(def, point));
    }
    int axis = 0;
    while (axis < dim && ++idx[axis] == resolution) idx[axis++] = 0;
    if (axis == dim) break;
  }

  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  double total = 0.0;
  grid.weights.resize(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    grid.weights[i] = std::exp(log_weights[i] - top);
    total += grid.weights[i];
  }
  grid.marginals.assign(dim, std::vector<double>(resolution, 0.0));
  for (std::size_t i = 0; i < grid.weights.size(); ++i) {
    grid.weights[i] /= total;
    for (int a = 0; a < dim; ++a) {
      grid.marginals[a][indices[i][a]] += grid.weights[i];
    }
  }
  return grid;
}

double alignment(const std::vector<Eigen::VectorXd>& samples,
                 const Eigen::VectorXd& true_weights) {
  const double true_norm = true_weights.norm();
  if (!(true_norm > 0.0)) {
    throw std::invalid_argument("alignment needs nonzero true weights");
  }
  if (samples.empty()) throw std::invalid_argument("alignment of no samples");
  double total = 0.0;
  for (const auto& s : samples) {
    const double n = s.norm();
    if (n > 0.0) total += true_weights.dot(s) / (true_norm * n);
  }
  return total / static_cast<double>(samples.size());
}

double alignment(const SampleSet& samples, const RewardParams& true_params) {
  return alignment(samples.samples, true_params.weights());
}

}  // namespace prefwise
