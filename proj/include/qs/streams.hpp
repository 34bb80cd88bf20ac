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
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qs {

enum class StreamKind { kSorted, kReversed, kUniform, kZipf, kSawtooth, kFile };

// Bad stream parameters or unreadable/malformed stream files.
class StreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StreamSpec {
  StreamKind kind = StreamKind::kUniform;
  // Number of items. For file streams, 0 means the whole file.
  uint64_t n = 0;
  uint64_t seed = 0;
  double zipf_exponent = 1.1;
  uint64_t zipf_universe = uint64_t{1} << 20;
  uint64_t sawtooth_period = 1000;
  std::string path;

  bool operator==(const StreamSpec&) const = default;
};

// "sorted", "reversed", "uniform", "zipf", "sawtooth" or "file:PATH".
StreamSpec parse_distribution(const std::string& text);
std::string distribution_name(const StreamSpec& spec);

// Deterministic item source; the same spec yields the same sequence.
class StreamSource {
 public:
  explicit StreamSource(const StreamSpec& spec);
  ~StreamSource();
  StreamSource(StreamSource&&) noexcept;
  StreamSource& operator=(StreamSource&&) noexcept;

  bool done() const { return produced_ >= length_; }
  int64_t next();
  uint64_t length() const { return length_; }

 private:
  struct Zipf;

  StreamSpec spec_;
  uint64_t length_ = 0;
  uint64_t produced_ = 0;
  std::mt19937_64 engine_;
  std::unique_ptr<Zipf> zipf_;
  std::vector<int64_t> file_items_;
};

std::vector<int64_t> generate_stream(const StreamSpec& spec);

// One decimal integer per line. Throws StreamError naming the first bad line.
std::vector<int64_t> read_stream_file(const std::string& path);
void write_stream_file(const std::string& path, const std::vector<int64_t>& items);

}  // namespace qs
