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

// Brute-force helpers shared by the tests. Deliberately naive: linear scans
// over the raw items, no sorting, nothing borrowed from the library.

#pragma once

#include <cstdint>
#include <vector>

namespace brute {

struct Positions {
  uint64_t lo;  // |{z < y}| + 1
  uint64_t hi;  // |{z <= y}|
};

template <typename T>
Positions positions(const std::vector<T>& items, const T& y) {
  uint64_t less = 0;
  uint64_t less_eq = 0;
  for (const T& z : items) {
    less += z < y;
    less_eq += !(y < z);
  }
  return {less + 1, less_eq};
}

// Rank error of answer y for target rank rho: distance from rho to the
// positions y occupies in the sorted stream.
template <typename T>
uint64_t rank_error(const std::vector<T>& items, const T& y, uint64_t rho) {
  const Positions p = positions(items, y);
  if (rho < p.lo) return p.lo - rho;
  if (rho > p.hi) return rho - p.hi;
  return 0;
}

template <typename T>
bool contains(const std::vector<T>& items, const T& y) {
  for (const T& z : items) {
    if (!(z < y) && !(y < z)) return true;
  }
  return false;
}

}  // namespace brute
