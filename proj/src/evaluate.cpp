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

#include "qs/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "qs/oracle.hpp"

namespace qs {

Algorithm parse_algorithm(const std::string& text) {
  if (text == "gk") {
    return Algorithm::kGk;
  }
  if (text == "fixedn") {
    return Algorithm::kFixedN;
  }
  if (text == "online") {
    return Algorithm::kOnline;
  }
  if (text == "reservoir-baseline" || text == "reservoir") {
    return Algorithm::kReservoir;
  }
  throw std::invalid_argument("unknown algorithm '" + text +
                              "' (expected gk|fixedn|online|reservoir-baseline)");
}

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kGk:
      return "gk";
    case Algorithm::kFixedN:
      return "fixedn";
    case Algorithm::kOnline:
      return "online";
    case Algorithm::kReservoir:
      return "reservoir-baseline";
  }
  return "unknown";
}

uint64_t default_online_row_size(double epsilon) {
  return std::max<uint64_t>(64, static_cast<uint64_t>(std::ceil(512.0 / epsilon - 1e-9)));
}

uint64_t resolved_m(const EvalConfig& config) {
  if (config.m) {
    return *config.m;
  }
  switch (config.algorithm) {
    case Algorithm::kFixedN:
      return std::min(config.n, default_sample_size(config.epsilon));
    case Algorithm::kOnline:
    case Algorithm::kReservoir:
      return default_online_row_size(config.epsilon);
    case Algorithm::kGk:
      return 0;
  }
  return 0;
}

double resolved_tolerance(const EvalConfig& config) {
  return config.tolerance.value_or(config.epsilon);
}

std::vector<double> default_phis() {
  std::vector<double> phis;
  for (int k = 1; k <= 19; ++k) {
    phis.push_back(k / 20.0);
  }
  return phis;
}

std::vector<uint64_t> default_probes(const EvalConfig& config) {
  std::vector<uint64_t> probes;
  for (uint64_t p = 1; p <= config.n; p *= 2) {
    probes.push_back(p);
    if (p > config.n / 2) {
      break;
    }
  }
  if (config.algorithm == Algorithm::kOnline) {
    const uint64_t m = resolved_m(config);
    for (unsigned r = 1; r < 62 && schedule::activation(r, m) < config.n; ++r) {
      const uint64_t edge = schedule::activation(r, m);
      probes.push_back(edge - 1);
      probes.push_back(edge);
      probes.push_back(edge + 1);
    }
  }
  probes.push_back(config.n);
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  std::erase(probes, 0);
  return probes;
}

std::vector<uint64_t> resolved_probes(const EvalConfig& config) {
  if (config.probes.empty()) {
    return default_probes(config);
  }
  std::vector<uint64_t> probes = config.probes;
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  for (uint64_t p : probes) {
    if (p < 1 || p > config.n) {
      throw std::invalid_argument("probe time " + std::to_string(p) + " outside [1, n = " +
                                  std::to_string(config.n) + "]");
    }
  }
  return probes;
}

std::vector<double> resolved_phis(const EvalConfig& config) {
  if (config.phis.empty()) {
    return default_phis();
  }
  for (double phi : config.phis) {
    if (!(phi > 0.0 && phi <= 1.0)) {
      throw std::invalid_argument("phi " + std::to_string(phi) + " outside (0, 1]");
    }
  }
  return config.phis;
}

uint64_t trial_seed(const EvalConfig& config, uint64_t trial) { return config.seed + trial; }

StreamSpec trial_stream(const EvalConfig& config, uint64_t trial) {
  StreamSpec spec = config.stream;
  spec.n = config.n;
  spec.seed = trial_seed(config, trial);
  return spec;
}

OnlineConfig online_config(const EvalConfig& config, uint64_t seed) {
  OnlineConfig out;
  out.epsilon = config.epsilon;
  out.m = resolved_m(config);
  out.seed = seed;
  out.row0 = config.row0;
  out.replacement_ranks = config.replacement_ranks;
  return out;
}

uint64_t online_peak_tuples(const OnlineConfig& config, const StreamSpec& stream) {
  OnlineSummary<int64_t> summary(config);
  StreamSource source(stream);
  uint64_t peak = 0;
  while (!source.done()) {
    summary.insert(source.next());
    peak = std::max(peak, summary.total_tuples());
  }
  return std::max<uint64_t>(peak, 1);
}

namespace {

using Impl = std::variant<GkSummary<int64_t>, FixedNSummary<int64_t>, OnlineSummary<int64_t>,
                          ReservoirBaseline<int64_t>>;

Impl make_impl(const EvalConfig& config, uint64_t trial) {
  const uint64_t seed = trial_seed(config, trial);
  switch (config.algorithm) {
    case Algorithm::kGk:
      return GkSummary<int64_t>(config.epsilon);
    case Algorithm::kFixedN:
      return FixedNSummary<int64_t>(config.epsilon, config.n, resolved_m(config), seed);
    case Algorithm::kOnline:
      return OnlineSummary<int64_t>(online_config(config, seed));
    case Algorithm::kReservoir: {
      const uint64_t k = config.reservoir_k
                             ? *config.reservoir_k
                             : online_peak_tuples(online_config(config, seed),
                                                  trial_stream(config, trial));
      return ReservoirBaseline<int64_t>(k, seed);
    }
  }
  throw std::logic_error("unreachable algorithm");
}

}  // namespace

SummaryDriver::SummaryDriver(const EvalConfig& config, uint64_t trial)
    : impl_(make_impl(config, trial)) {}

void SummaryDriver::insert(int64_t x) {
  ++t_;
  std::visit([x](auto& s) { s.insert(x); }, impl_);
}

DriverAnswer SummaryDriver::query(uint64_t rho) const {
  return std::visit(
      [rho](const auto& s) -> DriverAnswer {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FixedNSummary<int64_t>>) {
          const auto answer = s.query(rho);
          return {answer.value, 0, answer.guaranteed};
        } else if constexpr (std::is_same_v<S, OnlineSummary<int64_t>>) {
          return {s.query(rho), s.active_row(), true};
        } else {
          return {s.query(rho), 0, true};
        }
      },
      impl_);
}

uint64_t SummaryDriver::size() const {
  return std::visit(
      [](const auto& s) -> uint64_t {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FixedNSummary<int64_t>>) {
          return s.gk().tuple_count();
        } else if constexpr (std::is_same_v<S, OnlineSummary<int64_t>>) {
          return s.total_tuples();
        } else if constexpr (std::is_same_v<S, ReservoirBaseline<int64_t>>) {
          return s.size();
        } else {
          return s.tuple_count();
        }
      },
      impl_);
}

const OnlineSummary<int64_t>* SummaryDriver::online() const {
  return std::get_if<OnlineSummary<int64_t>>(&impl_);
}

void parallel_for(uint64_t count, unsigned workers, const std::function<void(uint64_t)>& fn) {
  if (workers == 0) {
    workers = std::max(1u, std::thread::hardware_concurrency());
  }
  workers = static_cast<unsigned>(std::min<uint64_t>(workers, count));
  if (workers <= 1) {
    for (uint64_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> threads;
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (uint64_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
          next = count;
        }
      }
    });
  }
  threads.clear();
  if (error) {
    std::rethrow_exception(error);
  }
}

namespace {

struct TrialResult {
  std::vector<QueryRecord> queries;
  uint64_t peak = 0;
};

TrialResult run_trial(const EvalConfig& config, uint64_t trial, const std::vector<uint64_t>& probes,
                      const std::vector<double>& phis) {
  TrialResult result;
  SummaryDriver driver(config, trial);
  ExactOracle<int64_t> oracle;
  StreamSource source(trial_stream(config, trial));
  std::size_t next_probe = 0;
  for (uint64_t t = 1; t <= config.n && next_probe < probes.size(); ++t) {
    const int64_t x = source.next();
    driver.insert(x);
    oracle.insert(x);
    result.peak = std::max(result.peak, driver.size());
    if (probes[next_probe] != t) {
      continue;
    }
    ++next_probe;
    for (double phi : phis) {
      QueryRecord rec;
      rec.trial = trial;
      rec.t = t;
      rec.phi = phi;
      rec.rho = OnlineSummary<int64_t>::phi_to_rank(phi, t);
      const DriverAnswer answer = driver.query(rec.rho);
      rec.answer = answer.value;
      rec.row = answer.row;
      rec.guaranteed = answer.guaranteed;
      const RankRange range = oracle.rank_range(answer.value);
      rec.exact_rank = range.hi;
      rec.abs_err = range.distance(rec.rho);
      rec.norm_err = static_cast<double>(rec.abs_err) / static_cast<double>(t);
      result.queries.push_back(rec);
    }
  }
  return result;
}

void accumulate(ErrorAggregate& agg, const QueryRecord& rec, double tolerance) {
  ++agg.queries;
  if (rec.norm_err > tolerance) {
    ++agg.failures;
  }
  agg.max_norm_err = std::max(agg.max_norm_err, rec.norm_err);
  agg.mean_norm_err += rec.norm_err;
}

void finish(ErrorAggregate& agg) {
  if (agg.queries > 0) {
    agg.mean_norm_err /= static_cast<double>(agg.queries);
    agg.failure_fraction = static_cast<double>(agg.failures) / static_cast<double>(agg.queries);
  }
}

}  // namespace

ErrorReport evaluate(const EvalConfig& config) {
  if (config.trials == 0) {
    throw std::invalid_argument("evaluate: trials must be positive");
  }
  if (config.n == 0) {
    throw std::invalid_argument("evaluate: n must be positive");
  }
  const std::vector<uint64_t> probes = resolved_probes(config);
  const std::vector<double> phis = resolved_phis(config);

  std::vector<TrialResult> trials(config.trials);
  parallel_for(config.trials, config.workers,
               [&](uint64_t i) { trials[i] = run_trial(config, i, probes, phis); });

  ErrorReport report;
  report.config = config;
  report.tolerance = resolved_tolerance(config);
  std::map<std::pair<uint64_t, std::size_t>, ErrorAggregate> by_query;
  std::map<uint64_t, ErrorAggregate> by_probe;
  for (uint64_t i = 0; i < trials.size(); ++i) {
    report.space.push_back({i, trial_seed(config, i), trials[i].peak});
    for (const QueryRecord& rec : trials[i].queries) {
      const auto phi_index = static_cast<std::size_t>(
          std::find(phis.begin(), phis.end(), rec.phi) - phis.begin());
      ErrorAggregate& q = by_query[{rec.t, phi_index}];
      q.t = rec.t;
      q.phi = rec.phi;
      accumulate(q, rec, report.tolerance);
      ErrorAggregate& p = by_probe[rec.t];
      p.t = rec.t;
      accumulate(p, rec, report.tolerance);
      accumulate(report.overall, rec, report.tolerance);
      report.queries.push_back(rec);
    }
  }
  for (auto& [key, agg] : by_query) {
    finish(agg);
    report.by_query.push_back(agg);
  }
  for (auto& [key, agg] : by_probe) {
    finish(agg);
    report.by_probe.push_back(agg);
  }
  finish(report.overall);
  return report;
}

}  // namespace qs
