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

namespace qs {

// Positions [lo, hi] (1-based) that a value occupies in the sorted multiset.
// For a value that is absent, lo = hi + 1.
struct RankRange {
  uint64_t lo;
  uint64_t hi;

  // Distance from rho to the nearest position the value occupies. This is the
  // rank error of an answer when the stream has ties; for distinct items it
  // is |hi - rho|.
  uint64_t distance(uint64_t rho) const {
    if (rho < lo) {
      return lo - rho;
    }
    if (rho > hi) {
      return rho - hi;
    }
    return 0;
  }
};

// Exact, memory-unbounded rank oracle. Keeps every item; sorting is deferred
// until the next query and only the unsorted tail is sorted and merged.
//
// rank(y) = |{z : z <= y}|.
template <typename T>
class ExactOracle {
 public:
  void insert(const T& x) { items_.push_back(x); }

  template <typename It>
  void insert(It first, It last) {
    items_.insert(items_.end(), first, last);
  }

  uint64_t rank(const T& y) const {
    settle();
    return static_cast<uint64_t>(std::upper_bound(items_.begin(), items_.end(), y) - items_.begin());
  }

  RankRange rank_range(const T& y) const {
    settle();
    const auto lo = std::lower_bound(items_.begin(), items_.end(), y) - items_.begin();
    const auto hi = std::upper_bound(items_.begin() + lo, items_.end(), y) - items_.begin();
    return {static_cast<uint64_t>(lo) + 1, static_cast<uint64_t>(hi)};
  }

  // Item at ascending position rho, 1 <= rho <= size().
  const T& select(uint64_t rho) const {
    if (items_.empty()) {
      throw std::logic_error("ExactOracle: select on an empty oracle");
    }
    if (rho < 1 || rho > items_.size()) {
      throw std::out_of_range("ExactOracle: rank outside [1, size]");
    }
    settle();
    return items_[rho - 1];
  }

  uint64_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

 private:
  void settle() const {
    if (items_.empty()) {
      throw std::logic_error("ExactOracle: query on an empty oracle");
    }
    if (sorted_ == items_.size()) {
      return;
    }
    const auto mid = items_.begin() + static_cast<std::ptrdiff_t>(sorted_);
    std::sort(mid, items_.end());
    std::inplace_merge(items_.begin(), mid, items_.end());
    sorted_ = items_.size();
  }

  mutable std::vector<T> items_;
  mutable std::size_t sorted_ = 0;
};

}  // namespace qs
