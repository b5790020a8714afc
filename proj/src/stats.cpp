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

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace prefwise {

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.std_error = sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired test needs equally many values");
  }
  if (a.size() < 2) throw std::invalid_argument("paired test needs n >= 2");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const Summary s = summarize(diff);

  PairedTest out;
  out.n = s.n;
  out.mean_difference = s.mean;
  out.degrees_of_freedom = static_cast<double>(s.n - 1);
  if (s.std_error == 0.0) {
    // Degenerate: every difference is identical.
    out.t = s.mean > 0 ? INFINITY : (s.mean < 0 ? -INFINITY : 0.0);
    out.p_greater = s.mean > 0 ? 0.0 : (s.mean < 0 ? 1.0 : 0.5);
    out.p_two_sided = s.mean != 0 ? 0.0 : 1.0;
    return out;
  }
  out.t = s.mean / s.std_error;
  const boost::math::students_t dist(out.degrees_of_freedom);
  out.p_greater = boost::math::cdf(boost::math::complement(dist, out.t));
  out.p_two_sided =
      2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
  return out;
}

}  // namespace prefwise
