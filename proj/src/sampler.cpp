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

#include "qs/sampler.hpp"

#include <stdexcept>

namespace qs {

Rate::Rate(uint64_t num, uint64_t den) : num_(num), den_(den) {
  if (num == 0 || den == 0 || num > den) {
    throw std::invalid_argument("Rate: need 0 < num <= den, got " + std::to_string(num) + "/" +
                                std::to_string(den));
  }
}

Rate Rate::inverse_power_of_two_times_32(unsigned shift) {
  if (shift > 58) {
    throw std::overflow_error("Rate: 2^" + std::to_string(shift) + " * 32 overflows 64 bits");
  }
  return Rate(1, uint64_t{32} << shift);
}

std::string Rate::to_string() const { return std::to_string(num_) + "/" + std::to_string(den_); }

std::mt19937_64 make_engine(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

BernoulliSampler::BernoulliSampler(Rate rate, uint64_t seed, uint64_t stream)
    : rate_(rate), engine_(make_engine(seed, stream)), always_(rate.is_one()) {
  if (!always_) {
    // floor(num * 2^64 / den) < 2^64 because num < den.
    const unsigned __int128 scaled = static_cast<unsigned __int128>(rate.num()) << 64;
    threshold_ = static_cast<uint64_t>(scaled / rate.den());
  }
}

}  // namespace qs
