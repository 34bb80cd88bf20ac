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

#include "qs/streams.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "qs/sampler.hpp"

namespace qs {

namespace {

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
double unit_interval(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

// Inverse-CDF sampler over ranks 1..universe with weight k^-exponent.
struct StreamSource::Zipf {
  std::vector<double> cdf;

  Zipf(double exponent, uint64_t universe) {
    if (universe == 0 || universe > (uint64_t{1} << 26) || !(exponent > 0.0)) {
      throw StreamError("zipf: need exponent > 0 and 1 <= universe <= 2^26");
    }
    cdf.resize(universe);
    double total = 0.0;
    for (uint64_t k = 1; k <= universe; ++k) {
      total += std::pow(static_cast<double>(k), -exponent);
      cdf[k - 1] = total;
    }
    for (double& c : cdf) {
      c /= total;
    }
  }

  int64_t draw(std::mt19937_64& engine) const {
    const double u = unit_interval(engine);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto k = std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1);
    return static_cast<int64_t>(k) + 1;
  }
};

StreamSpec parse_distribution(const std::string& text) {
  StreamSpec spec;
  if (text == "sorted") {
    spec.kind = StreamKind::kSorted;
  } else if (text == "reversed") {
    spec.kind = StreamKind::kReversed;
  } else if (text == "uniform") {
    spec.kind = StreamKind::kUniform;
  } else if (text == "zipf") {
    spec.kind = StreamKind::kZipf;
  } else if (text == "sawtooth") {
    spec.kind = StreamKind::kSawtooth;
  } else if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    spec.kind = StreamKind::kFile;
    spec.path = text.substr(5);
  } else {
    throw StreamError("unknown distribution '" + text +
                      "' (expected sorted|reversed|uniform|zipf|sawtooth|file:PATH)");
  }
  return spec;
}

std::string distribution_name(const StreamSpec& spec) {
  switch (spec.kind) {
    case StreamKind::kSorted:
      return "sorted";
    case StreamKind::kReversed:
      return "reversed";
    case StreamKind::kUniform:
      return "uniform";
    case StreamKind::kZipf:
      return "zipf";
    case StreamKind::kSawtooth:
      return "sawtooth";
    case StreamKind::kFile:
      return "file:" + spec.path;
  }
  return "unknown";
}

StreamSource::StreamSource(const StreamSpec& spec)
    : spec_(spec), length_(spec.n), engine_(make_engine(spec.seed, 0x5EED)) {
  switch (spec.kind) {
    case StreamKind::kZipf:
      zipf_ = std::make_unique<Zipf>(spec.zipf_exponent, spec.zipf_universe);
      break;
    case StreamKind::kSawtooth:
      if (spec.sawtooth_period == 0) {
        throw StreamError("sawtooth: period must be positive");
      }
      break;
    case StreamKind::kFile:
      file_items_ = read_stream_file(spec.path);
      if (length_ == 0) {
        length_ = file_items_.size();
      } else if (length_ > file_items_.size()) {
        throw StreamError(spec.path + ": has " + std::to_string(file_items_.size()) +
                          " items, " + std::to_string(length_) + " requested");
      }
      break;
    default:
      break;
  }
}

StreamSource::~StreamSource() = default;
StreamSource::StreamSource(StreamSource&&) noexcept = default;
StreamSource& StreamSource::operator=(StreamSource&&) noexcept = default;

int64_t StreamSource::next() {
  if (done()) {
    throw std::out_of_range("StreamSource: stream exhausted");
  }
  const uint64_t i = produced_++;
  switch (spec_.kind) {
    case StreamKind::kSorted:
      return static_cast<int64_t>(i + 1);
    case StreamKind::kReversed:
      return static_cast<int64_t>(length_ - i);
    case StreamKind::kUniform:
      return static_cast<int64_t>(engine_() >> 1);
    case StreamKind::kZipf:
      return zipf_->draw(engine_);
    case StreamKind::kSawtooth:
      return static_cast<int64_t>(i % spec_.sawtooth_period + 1);
    case StreamKind::kFile:
      return file_items_[i];
  }
  return 0;
}

std::vector<int64_t> generate_stream(const StreamSpec& spec) {
  StreamSource source(spec);
  std::vector<int64_t> out;
  out.reserve(source.length());
  while (!source.done()) {
    out.push_back(source.next());
  }
  return out;
}

std::vector<int64_t> read_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw StreamError(path + ": cannot open stream file");
  }
  std::vector<int64_t> items;
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    int64_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
      throw StreamError(path + ":" + std::to_string(line_no) + ": not a decimal integer: '" + line +
                        "'");
    }
    items.push_back(value);
  }
  return items;
}

void write_stream_file(const std::string& path, const std::vector<int64_t>& items) {
  std::ofstream out(path);
  if (!out) {
    throw StreamError(path + ": cannot write stream file");
  }
  for (int64_t v : items) {
    out << v << '\n';
  }
}

}  // namespace qs
