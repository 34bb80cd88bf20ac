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
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qs/fixed_n_summary.hpp"
#include "qs/sampler.hpp"

namespace qs {

// Uniform size-k sample of the stream (Algorithm R), used as a space-matched
// baseline. Queries sort a copy of the sample.
template <typename T>
class ReservoirBaseline {
 public:
  ReservoirBaseline(uint64_t capacity, uint64_t seed)
      : capacity_(capacity), engine_(make_engine(seed, 0xBA5E)) {
    if (capacity == 0) {
      throw std::invalid_argument("ReservoirBaseline: capacity must be positive");
    }
    sample_.reserve(capacity);
  }

  void insert(const T& x) {
    ++t_;
    if (sample_.size() < capacity_) {
      sample_.push_back(x);
      return;
    }
    // Slot uniform in [0, t); keep x iff the slot is inside the reservoir.
    const uint64_t slot = static_cast<uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * t_) >> 64);
    if (slot < capacity_) {
      sample_[slot] = x;
    }
  }

  T query(uint64_t rho) const {
    if (sample_.empty()) {
      throw std::logic_error("ReservoirBaseline: query on an empty sample");
    }
    std::vector<T> sorted = sample_;
    std::sort(sorted.begin(), sorted.end());
    const uint64_t k = sorted.size();
    const uint64_t idx = std::clamp<uint64_t>(
        round_ratio(static_cast<unsigned __int128>(rho) * k, t_), 1, k);
    return sorted[idx - 1];
  }

  uint64_t capacity() const { return capacity_; }
  uint64_t t() const { return t_; }
  std::size_t size() const { return sample_.size(); }

 private:
  uint64_t capacity_;
  uint64_t t_ = 0;
  std::mt19937_64 engine_;
  std::vector<T> sample_;
};

}  // namespace qs
