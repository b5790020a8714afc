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

#include "prefwise/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace prefwise {
namespace {

TEST(Summary, HandComputed) {
  const std::vector<double> x{1, 2, 3, 4};
  const Summary s = summarize(x);
  EXPECT_EQ(s.n, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  // sd = sqrt(5/3)
  EXPECT_NEAR(s.std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(summarize(std::vector<double>{7}).std_error, 0.0);
}

TEST(PairedT, HandComputed) {
  // Differences 1, 2, 3, 4, 5: mean 3, sd sqrt(2.5), t = 3 / (sqrt(2.5)/sqrt(5)) = 3 sqrt(2).
  const std::vector<double> a{2, 4, 6, 8, 10}, b{1, 2, 3, 4, 5};
  const PairedTest t = paired_t_test(a, b);
  EXPECT_EQ(t.n, 5u);
  EXPECT_DOUBLE_EQ(t.mean_difference, 3.0);
  EXPECT_NEAR(t.t, 3.0 * std::sqrt(2.0), 1e-12);
  EXPECT_EQ(t.degrees_of_freedom, 4.0);
  // Student t upper tail, 4 dof, at 4.242641.
  EXPECT_NEAR(t.p_greater, 0.0066178, 1e-6);
  EXPECT_NEAR(t.p_two_sided, 2 * t.p_greater, 1e-15);
}

TEST(PairedT, DirectionAndSymmetry) {
  const std::vector<double> a{0.3, 0.5, 0.1, 0.9, 0.4, 0.45}, b{0.2, 0.6, 0.0, 0.7, 0.35, 0.5};
  const PairedTest ab = paired_t_test(a, b), ba = paired_t_test(b, a);
  EXPECT_NEAR(ab.t, -ba.t, 1e-14);
  EXPECT_NEAR(ab.p_greater + ba.p_greater, 1.0, 1e-12);
  EXPECT_NEAR(ab.p_two_sided, ba.p_two_sided, 1e-12);
}

TEST(PairedT, Degenerate) {
  const std::vector<double> a{1, 2, 3}, b{0, 1, 2}, c{1, 2, 3};
  EXPECT_EQ(paired_t_test(a, b).p_greater, 0.0);
  EXPECT_EQ(paired_t_test(b, a).p_greater, 1.0);
  EXPECT_EQ(paired_t_test(a, c).p_greater, 0.5);
  EXPECT_THROW(paired_t_test(a, std::vector<double>{1, 2}), std::invalid_argument);
  EXPECT_THROW(paired_t_test(std::vector<double>{1}, std::vector<double>{0}),
               std::invalid_argument);
}

}  // namespace
}  // namespace prefwise
