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
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qs/fixed_n_summary.hpp"
#include "qs/gk_summary.hpp"
#include "qs/online_summary.hpp"
#include "qs/reservoir.hpp"
#include "qs/streams.hpp"

namespace qs {

enum class Algorithm { kGk, kFixedN, kOnline, kReservoir };

// "gk", "fixedn", "online", "reservoir-baseline" (also "reservoir").
Algorithm parse_algorithm(const std::string& text);
std::string algorithm_name(Algorithm algorithm);

// max(64, ceil(512 / eps)): the smallest row size for which every replacement
// rank q eps m / 512 is at least one.
uint64_t default_online_row_size(double epsilon);

struct EvalConfig {
  Algorithm algorithm = Algorithm::kOnline;
  // For kGk this is the GK error parameter itself.
  double epsilon = 0.1;
  // Sample size (fixedn) or row size (online, reservoir sizing). Empty means
  // the default rule for the algorithm.
  std::optional<uint64_t> m;
  uint64_t n = uint64_t{1} << 20;
  uint64_t seed = 1;
  uint64_t trials = 1;
  // Kind and shape of the stream; n and seed are taken from this config.
  StreamSpec stream;
  // Empty means default_probes().
  std::vector<uint64_t> probes;
  // Empty means the 19-point grid 0.05, 0.10, ..., 0.95.
  std::vector<double> phis;
  // Reservoir size; empty means the online summary's peak tuple count on the
  // same stream.
  std::optional<uint64_t> reservoir_k;
  // A query fails when its normalized error exceeds this; empty means epsilon.
  std::optional<double> tolerance;
  Row0Sampling row0 = Row0Sampling::kUnsampled;
  ReplacementRanks replacement_ranks = ReplacementRanks::kRowScaled;
  // Worker threads for trials; 0 means hardware concurrency.
  unsigned workers = 0;

  bool operator==(const EvalConfig&) const = default;
};

uint64_t resolved_m(const EvalConfig& config);
double resolved_tolerance(const EvalConfig& config);
std::vector<double> default_phis();
// Powers of two up to n plus n itself; for the online summary also the row
// handoff edges 2^r 16m - 1, 2^r 16m, 2^r 16m + 1.
std::vector<uint64_t> default_probes(const EvalConfig& config);
std::vector<uint64_t> resolved_probes(const EvalConfig& config);
std::vector<double> resolved_phis(const EvalConfig& config);

// Stream spec for one trial: the configured kind with this trial's n and seed.
StreamSpec trial_stream(const EvalConfig& config, uint64_t trial);
uint64_t trial_seed(const EvalConfig& config, uint64_t trial);

struct DriverAnswer {
  int64_t value = 0;
  unsigned row = 0;
  bool guaranteed = true;
};

// One summary of the configured algorithm over 64-bit integers, seeded for a
// given trial. Shared by the evaluator and the CLI run command.
class SummaryDriver {
 public:
  SummaryDriver(const EvalConfig& config, uint64_t trial);

  void insert(int64_t x);
  DriverAnswer query(uint64_t rho) const;
  // Tuples held (reservoir: slots held).
  uint64_t size() const;
  uint64_t t() const { return t_; }
  // Online summary, or nullptr for the other algorithms.
  const OnlineSummary<int64_t>* online() const;

 private:
  uint64_t t_ = 0;
  std::variant<GkSummary<int64_t>, FixedNSummary<int64_t>, OnlineSummary<int64_t>,
               ReservoirBaseline<int64_t>>
      impl_;
};

OnlineConfig online_config(const EvalConfig& config, uint64_t seed);

struct QueryRecord {
  uint64_t trial = 0;
  uint64_t t = 0;
  double phi = 0.0;
  uint64_t rho = 0;
  int64_t answer = 0;
  // |{z in X_t : z <= answer}|.
  uint64_t exact_rank = 0;
  // Distance from rho to the positions the answer occupies in sorted X_t.
  uint64_t abs_err = 0;
  // abs_err / t, always in [0, 1].
  double norm_err = 0.0;
  // Row that answered (online only).
  unsigned row = 0;
  // False for fixed-n queries before n/64 items.
  bool guaranteed = true;

  bool operator==(const QueryRecord&) const = default;
};

struct ErrorAggregate {
  uint64_t t = 0;
  std::optional<double> phi;
  uint64_t queries = 0;
  uint64_t failures = 0;
  double max_norm_err = 0.0;
  double mean_norm_err = 0.0;
  double failure_fraction = 0.0;

  bool operator==(const ErrorAggregate&) const = default;
};

struct TrialSpace {
  uint64_t trial = 0;
  uint64_t seed = 0;
  // Peak summary size over the run (tuples, or reservoir slots).
  uint64_t peak_tuples = 0;

  bool operator==(const TrialSpace&) const = default;
};

struct ErrorReport {
  EvalConfig config;
  double tolerance = 0.0;
  std::vector<QueryRecord> queries;
  std::vector<ErrorAggregate> by_query;
  std::vector<ErrorAggregate> by_probe;
  ErrorAggregate overall;
  std::vector<TrialSpace> space;
};

// Runs config.trials seeded trials (in parallel) and compares every answer
// against an exact oracle. Results are ordered by trial regardless of how
// trials were scheduled.
ErrorReport evaluate(const EvalConfig& config);

// Peak total tuple count of an online summary with this config over the
// stream. Used to size the reservoir baseline.
uint64_t online_peak_tuples(const OnlineConfig& config, const StreamSpec& stream);

// Runs fn(i) for i in [0, count) on up to `workers` threads. Rethrows the
// first exception after all workers stop.
void parallel_for(uint64_t count, unsigned workers, const std::function<void(uint64_t)>& fn);

}  // namespace qs
