// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include <gtest/gtest.h>

#include "qs/sampler.hpp"

namespace {

using qs::BernoulliSampler;
using qs::Rate;

uint64_t accepts(BernoulliSampler& s, uint64_t offers) {
  uint64_t k = 0;
  for (uint64_t i = 0; i < offers; ++i) k += s.offer();
  return k;
}

TEST(Rate, Validation) {
  EXPECT_THROW(Rate(0, 1), std::invalid_argument);
  EXPECT_THROW(Rate(2, 1), std::invalid_argument);
  EXPECT_THROW(Rate(1, 0), std::invalid_argument);
  EXPECT_NO_THROW(Rate(1, 1));
  EXPECT_TRUE(Rate::one().is_one());
  EXPECT_TRUE(Rate(7, 7).is_one());
  EXPECT_FALSE(Rate(1, 2).is_one());
}

TEST(Rate, RowRates) {
  EXPECT_EQ(Rate::inverse_power_of_two_times_32(0), Rate(1, 32));
  EXPECT_EQ(Rate::inverse_power_of_two_times_32(5), Rate(1, 1024));
  EXPECT_NO_THROW(Rate::inverse_power_of_two_times_32(58));
  EXPECT_THROW(Rate::inverse_power_of_two_times_32(59), std::overflow_error);
}

TEST(BernoulliSampler, RateOneAcceptsEverything) {
  BernoulliSampler s(Rate::one(), 123);
  EXPECT_EQ(accepts(s, 1000), 1000u);
  EXPECT_EQ(s.offered(), 1000u);
  EXPECT_EQ(s.accepted(), 1000u);
}

TEST(BernoulliSampler, HalfRateWithinFourSigma) {
  BernoulliSampler s(Rate(1, 2), 42);
  const double k = static_cast<double>(accepts(s, 1'000'000));
  EXPECT_LE(std::abs(k - 500'000.0), 4.0 * 500.0);
}

TEST(BernoulliSampler, NonDyadicRateWithinFourSigma) {
  BernoulliSampler s(Rate(1, 3), 7);
  const double n = 900'000;
  const double k = static_cast<double>(accepts(s, 900'000));
  const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
  EXPECT_LE(std::abs(k - n / 3), 4.0 * sigma);
}

TEST(BernoulliSampler, TinyRateWithinFourSigma) {
  BernoulliSampler s(Rate::inverse_power_of_two_times_32(10), 5);  // 1/32768
  const double n = 4'000'000;
  const double p = 1.0 / 32768;
  const double k = static_cast<double>(accepts(s, 4'000'000));
  EXPECT_LE(std::abs(k - n * p), 4.0 * std::sqrt(n * p * (1 - p)));
}

TEST(BernoulliSampler, SameSeedSameSequence) {
  BernoulliSampler a(Rate(3, 10), 99);
  BernoulliSampler b(Rate(3, 10), 99);
  for (int i = 0; i < 10'000; ++i) ASSERT_EQ(a.offer(), b.offer());
}

TEST(BernoulliSampler, StreamsAreDistinct) {
  BernoulliSampler a(Rate(1, 2), 99, 0);
  BernoulliSampler b(Rate(1, 2), 99, 1);
  BernoulliSampler c(Rate(1, 2), 100, 0);
  int differ_ab = 0;
  int differ_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const bool x = a.offer();
    differ_ab += x != b.offer();
    differ_ac += x != c.offer();
  }
  EXPECT_GT(differ_ab, 300);
  EXPECT_GT(differ_ac, 300);
}

// Sample size: with rate m/n, |S_t| > 2tm/n should be rarer than
// exp(-m/192) (plus Monte Carlo slack) for every t >= n/64.
TEST(BernoulliSampler, SampleSizeTailMonteCarlo) {
  const uint64_t m = 1000;
  const uint64_t n = 64'000;
  const int trials = 1000;
  const uint64_t probes[] = {n / 64, n / 4, n};
  int blowups[3] = {0, 0, 0};
  for (int trial = 0; trial < trials; ++trial) {
    BernoulliSampler s(Rate(m, n), 1000 + trial);
    uint64_t size = 0;
    std::size_t next = 0;
    for (uint64_t t = 1; t <= n; ++t) {
      size += s.offer();
      if (t == probes[next]) {
        blowups[next] += size * n > 2 * t * m;
        ++next;
      }
    }
  }
  const double bound = std::exp(-static_cast<double>(m) / 192.0);
  const double slack = 3.0 * std::sqrt(bound * (1 - bound) / trials);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LE(static_cast<double>(blowups[i]) / trials, bound + slack) << "t = " << probes[i];
  }
  EXPECT_LE(static_cast<double>(blowups[2]) / trials, 0.02);
}

// Rank estimate: (n/m) rank(y, S_t) against rank(y, X_t) for a fixed y, on
// the stream 1..n where rank(y, X_t) = y.
TEST(BernoulliSampler, RankEstimateTailMonteCarlo) {
  const double eps = 0.5;
  const uint64_t n = 200'000;
  const uint64_t m = 100'000;
  const uint64_t y = n / 2;
  const int trials = 200;
  int deviations = 0;
  for (int trial = 0; trial < trials; ++trial) {
    BernoulliSampler s(Rate(m, n), 5000 + trial);
    uint64_t below = 0;
    for (uint64_t x = 1; x <= n; ++x) {
      below += s.offer() && x <= y;
    }
    const double estimate = static_cast<double>(n) / m * static_cast<double>(below);
    deviations += std::abs(estimate - static_cast<double>(y)) > eps * n / 8;
  }
  const double bound = 2.0 * std::exp(-eps * eps * m / 12288.0);
  EXPECT_LE(static_cast<double>(deviations) / trials,
            bound + 3.0 * std::sqrt(bound * (1 - bound) / trials));
}

}  // namespace
