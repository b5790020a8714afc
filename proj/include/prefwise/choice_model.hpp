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

#ifndef PREFWISE_CHOICE_MODEL_HPP_
#define PREFWISE_CHOICE_MODEL_HPP_

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace prefwise {

/// Answer to a preference query: the index of the chosen option, or the
/// "About Equal" outcome of a weak (K = 2) query.
class Outcome {
 public:
  static Outcome choice(int index);
  static Outcome about_equal() { return Outcome(kAboutEqual); }

  bool is_about_equal() const { return index_ == kAboutEqual; }
  /// Index of the chosen option; -1 for About Equal.
  int index() const { return index_; }
  /// Position in the fixed outcome order (Choice(0), Choice(1), ..., AboutEqual).
  int slot(int num_options) const {
    return is_about_equal() ? num_options : index_;
  }

  /// "A", "B" or "ABOUT_EQUAL" (two-option queries only).
  std::string label() const;
  static Outcome from_label(const std::string& label);

  bool operator==(const Outcome&) const = default;

 private:
  static constexpr int kAboutEqual = -1;
  explicit Outcome(int index) : index_(index) {}
  int index_;
};

enum class ChoiceKind { kStrict, kWeak };

/// How a (simulated or modelled) human answers queries.
///
/// `delta` is the minimum perceivable difference in raw reward units and is
/// only used by the weak model; `beta` multiplies rewards, never delta.
struct ChoiceModelConfig {
  ChoiceKind kind = ChoiceKind::kStrict;
  double delta = 0.0;
  double beta = 1.0;

  void validate() const;
  int num_outcomes() const { return kind == ChoiceKind::kWeak ? 3 : 2; }

  static ChoiceModelConfig strict(double beta = 1.0) {
    return {ChoiceKind::kStrict, 0.0, beta};
  }
  static ChoiceModelConfig weak(double delta, double beta = 1.0) {
    return {ChoiceKind::kWeak, delta, beta};
  }
};

std::string to_string(ChoiceKind kind);
ChoiceKind choice_kind_from_string(const std::string& name);

/// Softmax over beta * rewards, computed with a max shift.
std::vector<double> strict_choice_probs(std::span<const double> rewards,
                                        double beta);

/// Probabilities of (Choice(0), Choice(1), AboutEqual) for a weak query.
std::array<double, 3> weak_choice_probs(double reward0, double reward1,
                                        double delta, double beta);

/// Log-probability of `outcome` for the given option rewards. Computed in
/// log space so it stays finite for any finite rewards.
double outcome_log_likelihood(const Outcome& outcome,
                              std::span<const double> rewards,
                              const ChoiceModelConfig& config);

/// Inverse-CDF draw over the fixed outcome order (Choice(0), Choice(1), ...,
/// AboutEqual). When `includes_about_equal` is set the last entry of `probs`
/// is the About Equal probability.
Outcome sample_outcome(std::span<const double> probs, std::mt19937_64& rng,
                       bool includes_about_equal = false);

namespace detail {
/// log(1 + exp(x)) without overflow.
double softplus(double x);
}  // namespace detail

}  // namespace prefwise

#endif  // PREFWISE_CHOICE_MODEL_HPP_
