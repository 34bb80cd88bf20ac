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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "qs/gk_summary.hpp"
#include "qs/sampler.hpp"

namespace qs {

// Sample size that makes the fixed-n summary's failure probability provably
// small: ceil(300000 ln(1/eps) / eps^2). Far too large to run at desk scale.
inline uint64_t proven_fixed_n_sample_size(double epsilon) {
  return static_cast<uint64_t>(std::ceil(300000.0 * std::log(1.0 / epsilon) / (epsilon * epsilon)));
}

// Practical default: ceil((50 / eps^2) ln(1/eps)).
inline uint64_t default_sample_size(double epsilon) {
  return static_cast<uint64_t>(std::ceil(50.0 / (epsilon * epsilon) * std::log(1.0 / epsilon)));
}

// round_half_up(num / den) for non-negative integers.
inline uint64_t round_ratio(unsigned __int128 num, unsigned __int128 den) {
  return static_cast<uint64_t>((2 * num + den) / (2 * den));
}

template <typename T>
struct FixedNAnswer {
  T value;
  // False while fewer than n/64 items have been seen; the answer is then
  // best effort only.
  bool guaranteed;
};

// Summary for a stream whose length n is known up front: every item passes
// a Bernoulli(m/n) coin and the survivors feed a GK summary with error
// eps/8. Nothing but the GK summary is retained.
template <typename T, typename Compare = std::less<T>>
class FixedNSummary {
 public:
  FixedNSummary(double epsilon, uint64_t n, uint64_t m, uint64_t seed, Compare compare = Compare())
      : epsilon_(check_epsilon(epsilon)),
        n_(n),
        m_(m),
        gk_(epsilon / 8.0, std::move(compare)),
        sampler_(make_rate(n, m), seed) {}

  void insert(const T& x) {
    if (t_ >= n_) {
      throw std::out_of_range("FixedNSummary: stream longer than the declared n = " +
                              std::to_string(n_));
    }
    ++t_;
    if (!first_) first_ = x;
    if (sampler_.offer()) {
      gk_.insert(x);
    }
  }

  // Asks the GK summary for min(round(rho m / n), |S|). Until the first
  // sampled item arrives the answer is the stream's first item, unguaranteed.
  FixedNAnswer<T> query(uint64_t rho) const {
    if (t_ == 0) {
      throw std::logic_error("FixedNSummary: query before any insert");
    }
    if (gk_.empty()) return {*first_, false};
    return {gk_.query(sample_rank(rho)), guaranteed()};
  }

  uint64_t sample_rank(uint64_t rho) const {
    const uint64_t scaled = round_ratio(static_cast<unsigned __int128>(rho) * m_, n_);
    return std::clamp<uint64_t>(scaled, 1, std::max<uint64_t>(gk_.count(), 1));
  }

  bool guaranteed() const { return static_cast<unsigned __int128>(t_) * 64 >= n_; }

  double epsilon() const { return epsilon_; }
  uint64_t n() const { return n_; }
  uint64_t m() const { return m_; }
  uint64_t t() const { return t_; }
  uint64_t sample_count() const { return sampler_.accepted(); }
  const GkSummary<T, Compare>& gk() const { return gk_; }

 private:
  static double check_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 0.5)) {
      throw std::invalid_argument("FixedNSummary: epsilon must be in (0, 1/2]");
    }
    return epsilon;
  }

  static Rate make_rate(uint64_t n, uint64_t m) {
    if (m < 1 || m > n) {
      throw std::invalid_argument("FixedNSummary: need 1 <= m <= n, got m = " + std::to_string(m) +
                                  ", n = " + std::to_string(n));
    }
    return Rate(m, n);
  }

  double epsilon_;
  uint64_t n_;
  uint64_t m_;
  uint64_t t_ = 0;
  std::optional<T> first_;
  GkSummary<T, Compare> gk_;
  BernoulliSampler sampler_;
};

}  // namespace qs
