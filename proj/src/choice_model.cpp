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

#include "prefwise/choice_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace prefwise {

namespace detail {

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace detail

namespace {

void require_finite(std::span<const double> rewards) {
  for (double r : rewards) {
    if (!std::isfinite(r)) throw std::invalid_argument("non-finite reward");
  }
}

}  // namespace

Outcome Outcome::choice(int index) {
  if (index < 0) throw std::invalid_argument("choice index must be >= 0");
  return Outcome(index);
}

std::string Outcome::label() const {
  if (is_about_equal()) return "ABOUT_EQUAL";
  if (index_ == 0) return "A";
  if (index_ == 1) return "B";
  throw std::logic_error("no label for choice index " + std::to_string(index_));
}

Outcome Outcome::from_label(const std::string& label) {
  if (label == "A") return choice(0);
  if (label == "B") return choice(1);
  if (label == "ABOUT_EQUAL") return about_equal();
  throw std::invalid_argument("unknown answer label '" + label +
                              "' (expected A, B or ABOUT_EQUAL)");
}

void ChoiceModelConfig::validate() const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("choice model delta must be finite and >= 0");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("choice model beta must be finite and > 0");
  }
}

std::string to_string(ChoiceKind kind) {
  return kind == ChoiceKind::kWeak ? "weak" : "strict";
}

ChoiceKind choice_kind_from_string(const std::string& name) {
  if (name == "strict") return ChoiceKind::kStrict;
  if (name == "weak") return ChoiceKind::kWeak;
  throw std::invalid_argument("unknown choice model '" + name +
                              "' (expected strict or weak)");
}

std::vector<double> strict_choice_probs(std::span<const double> rewards,
                                        double beta) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("a query needs at least two options");
  }
  require_finite(rewards);
  const double top = beta * *std::max_element(rewards.begin(), rewards.end());
  std::vector<double> probs(rewards.size());
  double total = 0.0;
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    probs[k] = std::exp(beta * rewards[k] - top);
    total += probs[k];
  }
  for (double& p : probs) p /= total;
  return probs;
}

std::array<double, 3> weak_choice_probs(double reward0, double reward1,
                                        double delta, double beta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  if (!std::isfinite(reward0) || !std::isfinite(reward1)) {
    throw std::invalid_argument("non-finite reward");
  }
  const double gap = beta * reward1 - beta * reward0;
  const double p0 = std::exp(-detail::softplus(delta + gap));
  const double p1 = std::exp(-detail::softplus(delta - gap));
  return {p0, p1, std::expm1(2.0 * delta) * p0 * p1};
}

double outcome_log_likelihood(const Outcome& outcome,
                              std::span<const double> rewards,
                              const ChoiceModelConfig& config) {
  config.validate();
  require_finite(rewards);
  if (config.kind == ChoiceKind::kStrict) {
    if (outcome.is_about_equal()) {
      throw std::invalid_argument(
          "About Equal answer is not defined for a strict query");
    }
    if (rewards.size() < 2) {
      throw std::invalid_argument("a query needs at least two options");
    }
    if (static_cast<std::size_t>(outcome.index()) >= rewards.size()) {
      throw std::invalid_argument("choice index out of range");
    }
    const double top =
        config.beta * *std::max_element(rewards.begin(), rewards.end());
    double total = 0.0;
    for (double r : rewards) total += std::exp(config.beta * r - top);
    return config.beta * rewards[outcome.index()] - top - std::log(total);
  }

  if (rewards.size() != 2) {
    throw std::invalid_argument("weak queries have exactly two options");
  }
  const double gap = config.beta * rewards[1] - config.beta * rewards[0];
  if (outcome.is_about_equal()) {
    if (config.delta == 0.0) {
      throw std::invalid_argument(
          "About Equal answer with delta = 0 has zero probability");
    }
    return std::log(std::expm1(2.0 * config.delta)) -
           detail::softplus(config.delta + gap) -
           detail::softplus(config.delta - gap);
  }
  if (outcome.index() > 1) {
    throw std::invalid_argument("choice index out of range");
  }
  return outcome.index() == 0 ? -detail::softplus(config.delta + gap)
                              : -detail::softplus(config.delta - gap);
}

Outcome sample_outcome(std::span<const double> probs, std::mt19937_64& rng,
                       bool includes_about_equal) {
  const std::size_t min_size = includes_about_equal ? 3 : 2;
  if (probs.size() < min_size) {
    throw std::invalid_argument("too few outcome probabilities");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw std::invalid_argument("outcome probabilities sum to " +
                                std::to_string(total) + ", not 1");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng) * total;
  double cumulative = 0.0;
  const std::size_t last = probs.size() - 1;
  for (std::size_t k = 0; k < last; ++k) {
    cumulative += probs[k];
    if (u < cumulative) return Outcome::choice(static_cast<int>(k));
  }
  // Only reachable through rounding when the tail entries are zero.
  if (probs[last] == 0.0) {
    for (std::size_t k = last; k-- > 0;) {
      if (probs[k] > 0.0) return Outcome::choice(static_cast<int>(k));
    }
  }
  return includes_about_equal ? Outcome::about_equal()
                              : Outcome::choice(static_cast<int>(last));
}

}  // namespace prefwise
