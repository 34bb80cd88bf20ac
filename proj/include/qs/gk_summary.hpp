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
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qs {

// Greenwald-Khanna summary over a totally ordered domain.
//
// Holds an ordered list of tuples (value, g, delta). For tuple i, the sum of
// g over tuples 0..i is the smallest rank the value can have among the
// inserted items (rmin) and rmin + delta is the largest (rmax). Every tuple
// keeps g + delta <= capacity(), where capacity() = max(1, floor(2 eps n)),
// which is enough for query(rho) to return an inserted item whose rank is
// within eps * n of rho.
//
// Ranks are 1-based and ascending: the smallest item has rank 1.
template <typename T, typename Compare = std::less<T>>
class GkSummary {
 public:
  struct Tuple {
    T value;
    uint64_t g;
    uint64_t delta;

    bool operator==(const Tuple&) const = default;
  };

  explicit GkSummary(double epsilon, Compare compare = Compare())
      : epsilon_(epsilon), compare_(std::move(compare)) {
    if (!(epsilon > 0.0 && epsilon <= 0.5)) {
      throw std::invalid_argument("GkSummary: epsilon must be in (0, 1/2], got " +
                                  std::to_string(epsilon));
    }
    compress_period_ = static_cast<uint64_t>(std::ceil(1.0 / (2.0 * epsilon)));
  }

  void insert(const T& x) {
    ++count_;
    // First tuple holding a value strictly greater than x. Equal values go
    // after the ones already present.
    auto pos = std::upper_bound(
        tuples_.begin(), tuples_.end(), x,
        [this](const T& v, const Tuple& t) { return compare_(v, t.value); });
    uint64_t delta = 0;
    if (pos != tuples_.begin() && pos != tuples_.end()) {
      // The new item sits strictly between its neighbours, so its largest
      // possible rank is the successor's old rmax.
      delta = pos->g + pos->delta - 1;
    }
    tuples_.insert(pos, Tuple{x, 1, delta});
    if (++since_compress_ >= compress_period_) {
      compress();
    }
  }

  // Merges a tuple into its right neighbour whenever the merged tuple still
  // fits under capacity(). The first tuple (the minimum) is never merged away
  // and the last one only absorbs, so min and max stay exact.
  void compress() {
    since_compress_ = 0;
    if (tuples_.size() < 3) {
      return;
    }
    const uint64_t cap = capacity();
    // Walk right to left, writing survivors into the tail of the buffer.
    std::size_t write = tuples_.size() - 1;
    for (std::size_t i = tuples_.size() - 1; i-- > 1;) {
      Tuple& right = tuples_[write];
      if (tuples_[i].g + right.g + right.delta <= cap) {
        right.g += tuples_[i].g;
      } else {
        --write;
        if (write != i) {
          tuples_[write] = std::move(tuples_[i]);
        }
      }
    }
    --write;
    if (write != 0) {
      tuples_[write] = std::move(tuples_[0]);
    }
    tuples_.erase(tuples_.begin(), tuples_.begin() + static_cast<std::ptrdiff_t>(write));
  }

  // Returns an inserted item y with |rank(y) - rho| <= epsilon() * count().
  // rho is clamped to [1, count()].
  const T& query(uint64_t rho) const {
    if (count_ == 0) {
      throw std::logic_error("GkSummary: query on an empty summary");
    }
    rho = std::clamp<uint64_t>(rho, 1, count_);
    const double upper = static_cast<double>(rho) + epsilon_ * static_cast<double>(count_);
    // rmin and rmax are both non-decreasing along the list, so the answer is
    // the tuple just before the first one whose rmax overshoots.
    uint64_t rmin = 0;
    for (std::size_t i = 0; i < tuples_.size(); ++i) {
      rmin += tuples_[i].g;
      if (static_cast<double>(rmin + tuples_[i].delta) > upper) {
        return tuples_[i == 0 ? 0 : i - 1].value;
      }
    }
    return tuples_.back().value;
  }

  uint64_t capacity() const {
    const auto cap = static_cast<uint64_t>(std::floor(2.0 * epsilon_ * static_cast<double>(count_)));
    return std::max<uint64_t>(cap, 1);
  }

  double epsilon() const { return epsilon_; }
  uint64_t count() const { return count_; }
  std::size_t tuple_count() const { return tuples_.size(); }
  bool empty() const { return count_ == 0; }
  std::span<const Tuple> tuples() const { return tuples_; }

 private:
  double epsilon_;
  Compare compare_;
  uint64_t compress_period_ = 1;
  uint64_t since_compress_ = 0;
  uint64_t count_ = 0;
  std::vector<Tuple> tuples_;
};

}  // namespace qs
