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

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

#include "qs/commands.hpp"
#include "report_format.hpp"

namespace qs {

namespace {

struct BenchRun {
  uint64_t n = 0;
  uint64_t peak_tuples = 0;
  // Online only: peak once row 0 has been freed (t > 32m).
  std::optional<uint64_t> peak_tuples_after_row0;
  std::vector<std::pair<uint64_t, uint64_t>> tuple_trace;
  std::vector<RowStats> rows;
  uint64_t max_row_gk_insertions = 0;
  uint64_t gk_insertion_cap = 0;
  uint64_t max_step_ops = 0;

  double seconds = 0.0;
  std::vector<uint64_t> latency_histogram;  // bucket k counts items in [2^k, 2^(k+1)) ns
};

bool is_checkpoint(uint64_t t, uint64_t n) {
  if (t == n) {
    return true;
  }
  uint64_t p = 1;
  while (p < t) {
    p *= 10;
  }
  return p == t;
}

BenchRun bench_once(EvalConfig config, uint64_t n, bool timing) {
  config.n = n;
  const std::vector<int64_t> items = generate_stream(trial_stream(config, 0));
  BenchRun run;
  run.n = n;
  SummaryDriver driver(config, 0);
  const OnlineSummary<int64_t>* online = driver.online();
  const uint64_t row0_end = online ? schedule::retirement(0, online->config().m) : 0;

  const auto start = std::chrono::steady_clock::now();
  for (uint64_t t = 1; t <= n; ++t) {
    driver.insert(items[t - 1]);
    const uint64_t size = driver.size();
    run.peak_tuples = std::max(run.peak_tuples, size);
    if (online && t > row0_end) {
      run.peak_tuples_after_row0 = std::max(run.peak_tuples_after_row0.value_or(0), size);
    }
    if (is_checkpoint(t, n)) {
      run.tuple_trace.emplace_back(t, size);
    }
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (online) {
    run.rows = online->retired_rows();
    const OnlineStats live = online->stats();
    run.rows.insert(run.rows.end(), live.rows.begin(), live.rows.end());
    for (const RowStats& row : run.rows) {
      if (row.r >= 1 || online->config().row0 == Row0Sampling::kSampled) {
        run.max_row_gk_insertions = std::max(run.max_row_gk_insertions, row.gk_insertions);
      }
    }
    run.gk_insertion_cap = 2 * online->config().m;
    run.max_step_ops = online->max_step_ops();
  }

  if (timing) {
    // Separate pass so per-item clock reads do not distort the throughput.
    SummaryDriver timed(config, 0);
    run.latency_histogram.assign(64, 0);
    for (uint64_t t = 1; t <= n; ++t) {
      const auto before = std::chrono::steady_clock::now();
      timed.insert(items[t - 1]);
      const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                          std::chrono::steady_clock::now() - before)
                          .count();
      ++run.latency_histogram[std::bit_width(static_cast<uint64_t>(std::max<int64_t>(ns, 1))) - 1];
    }
    while (!run.latency_histogram.empty() && run.latency_histogram.back() == 0) {
      run.latency_histogram.pop_back();
    }
  }
  return run;
}

nlohmann::json run_json(const BenchRun& run, bool online, bool timing) {
  nlohmann::json j{{"n", run.n}, {"peak_tuples", run.peak_tuples}};
  j["tuple_trace"] = nlohmann::json::array();
  for (const auto& [t, tuples] : run.tuple_trace) {
    j["tuple_trace"].push_back({{"t", t}, {"tuples", tuples}});
  }
  if (online) {
    j["peak_tuples_after_row0"] = run.peak_tuples_after_row0 ? nlohmann::json(*run.peak_tuples_after_row0)
                                                             : nlohmann::json(nullptr);
    j["max_row_gk_insertions"] = run.max_row_gk_insertions;
    j["gk_insertion_cap"] = run.gk_insertion_cap;
    j["max_step_ops"] = run.max_step_ops;
    j["rows"] = nlohmann::json::array();
    for (const RowStats& row : run.rows) {
      j["rows"].push_back({{"r", row.r},
                           {"samples", row.samples},
                           {"gk_insertions", row.gk_insertions},
                           {"tuples", row.tuples},
                           {"replacement_consumed", row.replacement_consumed},
                           {"replacement_total", row.replacement_total}});
    }
  }
  if (timing) {
    const double rate = run.seconds > 0 ? static_cast<double>(run.n) / run.seconds : 0.0;
    j["timing"] = {{"seconds", run.seconds},
                   {"items_per_sec", rate},
                   {"latency_histogram_log2_ns", run.latency_histogram},
                   {"max_latency_bucket_ns", run.latency_histogram.empty()
                                                 ? 0
                                                 : uint64_t{1} << run.latency_histogram.size()}};
  }
  return j;
}

}  // namespace

CommandOutput cmd_bench(const RunConfig& config) {
  const EvalConfig eval = to_eval_config(config);
  const bool online = eval.algorithm == Algorithm::kOnline;
  std::vector<BenchRun> runs{bench_once(eval, eval.n, config.timing)};
  if (config.compare_n) {
    runs.push_back(bench_once(eval, *config.compare_n, config.timing));
  }

  CommandOutput out;
  for (const BenchRun& run : runs) {
    const double rate = run.seconds > 0 ? static_cast<double>(run.n) / run.seconds : 0.0;
    out.diagnostics += "bench " + algorithm_name(eval.algorithm) + " n=" + std::to_string(run.n) +
                       ": " + format_double(rate) + " items/sec\n";
  }

  nlohmann::json flatness = nullptr;
  if (runs.size() == 2) {
    auto peak = [&](const BenchRun& run) {
      return run.peak_tuples_after_row0.value_or(run.peak_tuples);
    };
    const double a = static_cast<double>(peak(runs[0]));
    const double b = static_cast<double>(peak(runs[1]));
    const double rel = std::abs(b - a) / std::max(a, 1.0);
    const bool flat = rel <= config.flat_tolerance;
    flatness = {{"peak_a", peak(runs[0])},
                {"peak_b", peak(runs[1])},
                {"relative_difference", rel},
                {"tolerance", config.flat_tolerance},
                {"flat", flat}};
    if (!flat) {
      out.exit_code = kExitCheckFailed;
      out.diagnostics += "space is not flat: peaks " + std::to_string(peak(runs[0])) + " vs " +
                         std::to_string(peak(runs[1])) + "\n";
    }
  }

  switch (config.format) {
    case OutputFormat::kJson: {
      nlohmann::json j{{"command", "bench"}, {"config", eval}, {"flatness", flatness}};
      j["runs"] = nlohmann::json::array();
      for (const BenchRun& run : runs) {
        j["runs"].push_back(run_json(run, online, config.timing));
      }
      out.body = j.dump(2) + "\n";
      break;
    }
    case OutputFormat::kCsv: {
      out.body =
          "n,peak_tuples,peak_tuples_after_row0,max_row_gk_insertions,gk_insertion_cap,max_step_ops";
      out.body += config.timing ? ",items_per_sec\n" : "\n";
      for (const BenchRun& run : runs) {
        out.body += std::to_string(run.n) + "," + std::to_string(run.peak_tuples) + "," +
                    (run.peak_tuples_after_row0 ? std::to_string(*run.peak_tuples_after_row0) : "") +
                    "," + std::to_string(run.max_row_gk_insertions) + "," +
                    std::to_string(run.gk_insertion_cap) + "," + std::to_string(run.max_step_ops);
        if (config.timing) {
          out.body += "," + format_double(run.seconds > 0 ? run.n / run.seconds : 0.0);
        }
        out.body += "\n";
      }
      break;
    }
    case OutputFormat::kHuman:
      for (const BenchRun& run : runs) {
        out.body += "n=" + std::to_string(run.n) + " peak_tuples=" + std::to_string(run.peak_tuples);
        if (run.peak_tuples_after_row0) {
          out.body += " peak_after_row0=" + std::to_string(*run.peak_tuples_after_row0);
        }
        if (online) {
          out.body += " max_row_gk_insertions=" + std::to_string(run.max_row_gk_insertions) + "/" +
                      std::to_string(run.gk_insertion_cap) +
                      " max_step_ops=" + std::to_string(run.max_step_ops);
        }
        out.body += "\n";
      }
      if (!flatness.is_null()) {
        out.body += "flat=" + std::string(flatness["flat"].get<bool>() ? "yes" : "no") +
                    " relative_difference=" +
                    format_double(flatness["relative_difference"].get<double>()) + "\n";
      }
      break;
  }
  return out;
}

}  // namespace qs
