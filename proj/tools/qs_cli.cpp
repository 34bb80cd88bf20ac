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

// qs: run, evaluate and benchmark the streaming quantile summaries.
//
//   qs run      --algo online --n 1000000 --queries 500000:0.5,0.99
//   qs eval     --algo online --dist zipf --trials 10 --max-failure 0
//   qs bench    --algo online --n 1000000 --compare-n 10000000
//   qs goodness --algo fixedn --m 1000 --n 100000 --trials 200

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qs/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::string algo, dist, queries, format, out, row0, ranks;
  std::optional<double> epsilon, tolerance, max_failure, flat_tolerance;
  std::optional<uint64_t> m, n, seed, trials, k, compare_n;
  std::optional<unsigned> workers;
  std::vector<uint64_t> probes;
  std::vector<double> phis;
  bool timing = false;
};

void add_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config, "JSON file with a saved configuration; flags override it");
  sub.add_option("--algo", f.algo, "gk|fixedn|online|reservoir-baseline");
  sub.add_option("--epsilon", f.epsilon, "Target rank error, in (0, 1/2]");
  sub.add_option("--m", f.m, "Sample size (fixedn) or row size (online)");
  sub.add_option("--n", f.n, "Stream length (default 2^20, or the whole file for file:PATH)");
  sub.add_option("--seed", f.seed, "Base seed; trial i uses seed + i");
  sub.add_option("--dist", f.dist, "sorted|reversed|uniform|zipf|sawtooth|file:PATH");
  sub.add_option("--queries", f.queries, "Query file, or inline list of T:PHI / PHI");
  sub.add_option("--probes", f.probes, "Probe times")->delimiter(',');
  sub.add_option("--phis", f.phis, "Quantiles asked at each probe")->delimiter(',');
  sub.add_option("--trials", f.trials, "Independent trials");
  sub.add_option("--format", f.format, "json|csv|human");
  sub.add_option("--out", f.out, "Write the report here instead of stdout");
  sub.add_option("--row0", f.row0, "unsampled|sampled");
  sub.add_option("--replacement-ranks", f.ranks, "row-scaled|literal");
  sub.add_option("--k", f.k, "Reservoir capacity for the baseline");
  sub.add_option("--tolerance", f.tolerance, "Normalized error counted as a failure");
  sub.add_option("--max-failure", f.max_failure, "eval: exit 1 above this failure fraction");
  sub.add_option("--compare-n", f.compare_n, "bench: second stream length for the space check");
  sub.add_option("--flat-tolerance", f.flat_tolerance, "bench: allowed relative peak difference");
  sub.add_flag("--timing", f.timing, "bench: include wall-clock numbers in the report");
  sub.add_option("--workers", f.workers, "Trial threads (0 = hardware concurrency)");
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config " + path);
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("bad config " + path + ": " + e.what());
  }
}

template <typename T>
void set_if(nlohmann::json& j, const char* key, const std::optional<T>& value) {
  if (value) {
    j[key] = *value;
  }
}

void set_if(nlohmann::json& j, const char* key, const std::string& value) {
  if (!value.empty()) {
    j[key] = value;
  }
}

qs::RunConfig build_config(const std::string& command, const Flags& f) {
  nlohmann::json j = f.config.empty() ? nlohmann::json::object() : load_config(f.config);
  j["subcommand"] = command;
  set_if(j, "algo", f.algo);
  set_if(j, "epsilon", f.epsilon);
  set_if(j, "m", f.m);
  set_if(j, "n", f.n);
  if (!f.n && f.dist.rfind("file:", 0) == 0) {
    j["n"] = 0;  // whole file
  }
  set_if(j, "seed", f.seed);
  set_if(j, "dist", f.dist);
  set_if(j, "queries", f.queries);
  if (!f.probes.empty()) j["probes"] = f.probes;
  if (!f.phis.empty()) j["phis"] = f.phis;
  set_if(j, "trials", f.trials);
  set_if(j, "format", f.format);
  set_if(j, "out", f.out);
  set_if(j, "row0", f.row0);
  set_if(j, "replacement_ranks", f.ranks);
  set_if(j, "k", f.k);
  set_if(j, "tolerance", f.tolerance);
  set_if(j, "max_failure", f.max_failure);
  set_if(j, "compare_n", f.compare_n);
  set_if(j, "flat_tolerance", f.flat_tolerance);
  if (f.timing) j["timing"] = true;
  set_if(j, "workers", f.workers);
  try {
    return j.get<qs::RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad configuration: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming quantile summaries"};
  app.require_subcommand(1);
  Flags flags;
  for (const char* name : {"run", "eval", "bench", "goodness"}) {
    add_flags(*app.add_subcommand(name), flags);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return qs::kExitUsage;
  }

  qs::RunConfig config;
  try {
    config = build_config(app.get_subcommands().front()->get_name(), flags);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qs::kExitUsage;
  }

  const qs::CommandOutput result = qs::execute(config);
  std::cerr << result.diagnostics;
  if (result.exit_code == qs::kExitUsage) {
    return result.exit_code;
  }
  if (config.out.empty()) {
    std::cout << result.body;
  } else {
    std::ofstream out(config.out, std::ios::binary);
    out << result.body;
    if (!out) {
      std::cerr << "error: cannot write " << config.out << "\n";
      return qs::kExitUsage;
    }
  }
  return result.exit_code;
}
