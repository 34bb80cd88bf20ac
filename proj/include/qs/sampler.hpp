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

#include <cstdint>
#include <random>
#include <string>

namespace qs {

// Exact rational probability num/den with 0 < num <= den.
class Rate {
 public:
  Rate(uint64_t num, uint64_t den);

  static Rate one() { return Rate(1, 1); }
  // 1 / (2^shift * 32); throws std::overflow_error if the denominator does
  // not fit in 64 bits.
  static Rate inverse_power_of_two_times_32(unsigned shift);

  uint64_t num() const { return num_; }
  uint64_t den() const { return den_; }
  bool is_one() const { return num_ == den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const;

  bool operator==(const Rate&) const = default;

 private:
  uint64_t num_;
  uint64_t den_;
};

// Seeded mt19937_64 engine for an independent stream identified by
// (seed, stream). Distinct stream ids give unrelated sequences.
std::mt19937_64 make_engine(uint64_t seed, uint64_t stream = 0);

// Bernoulli coin with an exact rational bias. Each offer() draws one 64-bit
// word and accepts iff it falls below floor(rate * 2^64); a rate of exactly 1
// accepts without drawing.
class BernoulliSampler {
 public:
  BernoulliSampler(Rate rate, uint64_t seed, uint64_t stream = 0);

  bool offer() {
    ++offered_;
    if (always_) {
      ++accepted_;
      return true;
    }
    if (engine_() < threshold_) {
      ++accepted_;
      return true;
    }
    return false;
  }

  const Rate& rate() const { return rate_; }
  uint64_t offered() const { return offered_; }
  uint64_t accepted() const { return accepted_; }

 private:
  Rate rate_;
  std::mt19937_64 engine_;
  uint64_t threshold_ = 0;
  bool always_ = false;
  uint64_t offered_ = 0;
  uint64_t accepted_ = 0;
};

}  // namespace qs
