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

// Library side of the command-line harness. Each subcommand takes a
// RunConfig and returns the exact bytes the CLI would print, so everything
// the CLI does can be driven and diffed from code.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qs/evaluate.hpp"

namespace qs {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

enum class Subcommand { kRun, kEval, kBench, kGoodness };
enum class OutputFormat { kJson, kCsv, kHuman };

Subcommand parse_subcommand(const std::string& text);
std::string subcommand_name(Subcommand command);
OutputFormat parse_format(const std::string& text);
std::string format_name(OutputFormat format);

struct RunConfig {
  Subcommand subcommand = Subcommand::kRun;
  Algorithm algorithm = Algorithm::kOnline;
  double epsilon = 0.1;
  std::optional<uint64_t> m;
  uint64_t n = uint64_t{1} << 20;
  uint64_t seed = 1;
  // sorted|reversed|uniform|zipf|sawtooth|file:PATH
  std::string dist = "uniform";
  // Path to a query file or an inline list "T:PHI,PHI,..." (run only).
  std::string queries;
  std::vector<uint64_t> probes;
  std::vector<double> phis;
  uint64_t trials = 1;
  OutputFormat format = OutputFormat::kJson;
  std::string out;

  Row0Sampling row0 = Row0Sampling::kUnsampled;
  ReplacementRanks replacement_ranks = ReplacementRanks::kRowScaled;
  std::optional<uint64_t> reservoir_k;
  std::optional<double> tolerance;
  // eval: exit 1 if any probe's failure fraction exceeds this.
  std::optional<double> max_failure;
  // bench: second stream length for the space flatness check.
  std::optional<uint64_t> compare_n;
  // bench: allowed relative difference between the two peaks.
  double flat_tolerance = 0.01;
  // bench: include wall-clock measurements in the report (not reproducible).
  bool timing = false;
  unsigned workers = 0;

  bool operator==(const RunConfig&) const = default;
};

void to_json(nlohmann::json& j, const RunConfig& config);
void from_json(const nlohmann::json& j, RunConfig& config);

// Throws std::invalid_argument / StreamError on bad values.
EvalConfig to_eval_config(const RunConfig& config);

struct QuerySpec {
  uint64_t t = 0;
  double phi = 0.0;

  bool operator==(const QuerySpec&) const = default;
};

// Each entry is "T:PHI" (query after timestep T) or "PHI" (query after the
// last item). `text` is a comma-separated list, or a path to a file holding
// one entry per line.
std::vector<QuerySpec> parse_queries(const std::string& text, uint64_t n);

struct CommandOutput {
  int exit_code = kExitOk;
  // Report in the requested format.
  std::string body;
  // Human-readable notes for stderr (timings, failed checks, errors).
  std::string diagnostics;
};

CommandOutput cmd_run(const RunConfig& config);
CommandOutput cmd_eval(const RunConfig& config);
CommandOutput cmd_bench(const RunConfig& config);
CommandOutput cmd_goodness(const RunConfig& config);

// Dispatches on config.subcommand and maps input errors to kExitUsage.
CommandOutput execute(const RunConfig& config);

// Report renderers, also used by the acceptance suite.
std::string render_report(const ErrorReport& report, OutputFormat format);
nlohmann::json report_json(const ErrorReport& report);
void to_json(nlohmann::json& j, const EvalConfig& config);

// Environment variable capping n for goodness runs, and its default.
inline constexpr const char* kScaleCapEnv = "QS_SCALE_CAP";
inline constexpr uint64_t kDefaultScaleCap = 4'000'000;
uint64_t goodness_scale_cap();

}  // namespace qs
