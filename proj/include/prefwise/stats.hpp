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

#ifndef PREFWISE_STATS_HPP_
#define PREFWISE_STATS_HPP_

#include <cstddef>
#include <span>

namespace prefwise {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  /// Standard error of the mean (sample sd / sqrt(n)); 0 when n < 2.
  double std_error = 0.0;
};

Summary summarize(std::span<const double> values);

/// Paired t-test of mean(a - b) against zero.
struct PairedTest {
  std::size_t n = 0;
  double mean_difference = 0.0;
  double t = 0.0;
  double degrees_of_freedom = 0.0;
  /// P(T >= t) under the null: small when a exceeds b.
  double p_greater = 1.0;
  double p_two_sided = 1.0;
};

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace prefwise

#endif  // PREFWISE_STATS_HPP_
