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

#include "qs/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "report_format.hpp"

namespace qs {

Subcommand parse_subcommand(const std::string& text) {
  if (text == "run") return Subcommand::kRun;
  if (text == "eval") return Subcommand::kEval;
  if (text == "bench") return Subcommand::kBench;
  if (text == "goodness") return Subcommand::kGoodness;
  throw std::invalid_argument("unknown subcommand '" + text + "'");
}

std::string subcommand_name(Subcommand command) {
  switch (command) {
    case Subcommand::kRun:
      return "run";
    case Subcommand::kEval:
      return "eval";
    case Subcommand::kBench:
      return "bench";
    case Subcommand::kGoodness:
      return "goodness";
  }
  return "unknown";
}

OutputFormat parse_format(const std::string& text) {
  if (text == "json") return OutputFormat::kJson;
  if (text == "csv") return OutputFormat::kCsv;
  if (text == "human") return OutputFormat::kHuman;
  throw std::invalid_argument("unknown format '" + text + "' (expected json|csv|human)");
}

std::string format_name(OutputFormat format) {
  switch (format) {
    case OutputFormat::kJson:
      return "json";
    case OutputFormat::kCsv:
      return "csv";
    case OutputFormat::kHuman:
      return "human";
  }
  return "unknown";
}

namespace {

std::string row0_name(Row0Sampling row0) {
  return row0 == Row0Sampling::kUnsampled ? "unsampled" : "sampled";
}

Row0Sampling parse_row0(const std::string& text) {
  if (text == "unsampled") return Row0Sampling::kUnsampled;
  if (text == "sampled") return Row0Sampling::kSampled;
  throw std::invalid_argument("unknown row0 mode '" + text + "' (expected unsampled|sampled)");
}

std::string ranks_name(ReplacementRanks ranks) {
  return ranks == ReplacementRanks::kRowScaled ? "row-scaled" : "literal";
}

ReplacementRanks parse_ranks(const std::string& text) {
  if (text == "row-scaled") return ReplacementRanks::kRowScaled;
  if (text == "literal") return ReplacementRanks::kLiteral;
  throw std::invalid_argument("unknown replacement rank mode '" + text +
                              "' (expected row-scaled|literal)");
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::nullopt;
  }
  return j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{
      {"subcommand", subcommand_name(c.subcommand)},
      {"algo", algorithm_name(c.algorithm)},
      {"epsilon", c.epsilon},
      {"m", optional_json(c.m)},
      {"n", c.n},
      {"seed", c.seed},
      {"dist", c.dist},
      {"queries", c.queries},
      {"probes", c.probes},
      {"phis", c.phis},
      {"trials", c.trials},
      {"format", format_name(c.format)},
      {"out", c.out},
      {"row0", row0_name(c.row0)},
      {"replacement_ranks", ranks_name(c.replacement_ranks)},
      {"k", optional_json(c.reservoir_k)},
      {"tolerance", optional_json(c.tolerance)},
      {"max_failure", optional_json(c.max_failure)},
      {"compare_n", optional_json(c.compare_n)},
      {"flat_tolerance", c.flat_tolerance},
      {"timing", c.timing},
      {"workers", c.workers},
  };
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  const RunConfig d;
  c.subcommand = parse_subcommand(j.value("subcommand", subcommand_name(d.subcommand)));
  c.algorithm = parse_algorithm(j.value("algo", algorithm_name(d.algorithm)));
  c.epsilon = j.value("epsilon", d.epsilon);
  c.m = optional_from<uint64_t>(j, "m");
  c.n = j.value("n", d.n);
  c.seed = j.value("seed", d.seed);
  c.dist = j.value("dist", d.dist);
  c.queries = j.value("queries", d.queries);
  c.probes = j.value("probes", d.probes);
  c.phis = j.value("phis", d.phis);
  c.trials = j.value("trials", d.trials);
  c.format = parse_format(j.value("format", format_name(d.format)));
  c.out = j.value("out", d.out);
  c.row0 = parse_row0(j.value("row0", row0_name(d.row0)));
  c.replacement_ranks = parse_ranks(j.value("replacement_ranks", ranks_name(d.replacement_ranks)));
  c.reservoir_k = optional_from<uint64_t>(j, "k");
  c.tolerance = optional_from<double>(j, "tolerance");
  c.max_failure = optional_from<double>(j, "max_failure");
  c.compare_n = optional_from<uint64_t>(j, "compare_n");
  c.flat_tolerance = j.value("flat_tolerance", d.flat_tolerance);
  c.timing = j.value("timing", d.timing);
  c.workers = j.value("workers", d.workers);
}

void to_json(nlohmann::json& j, const EvalConfig& c) {
  j = nlohmann::json{
      {"algo", algorithm_name(c.algorithm)},
      {"epsilon", c.epsilon},
      {"m", resolved_m(c)},
      {"n", c.n},
      {"seed", c.seed},
      {"trials", c.trials},
      {"dist", distribution_name(c.stream)},
      {"probes", resolved_probes(c)},
      {"phis", resolved_phis(c)},
      {"tolerance", resolved_tolerance(c)},
      {"row0", row0_name(c.row0)},
      {"replacement_ranks", ranks_name(c.replacement_ranks)},
      {"k", optional_json(c.reservoir_k)},
  };
}

EvalConfig to_eval_config(const RunConfig& c) {
  if (!(c.epsilon > 0.0 && c.epsilon <= 0.5)) {
    throw std::invalid_argument("--epsilon must be in (0, 1/2]");
  }
  if (c.trials == 0) {
    throw std::invalid_argument("--trials must be positive");
  }
  EvalConfig e;
  e.algorithm = c.algorithm;
  e.epsilon = c.epsilon;
  e.m = c.m;
  e.seed = c.seed;
  e.trials = c.trials;
  e.stream = parse_distribution(c.dist);
  e.n = c.n;
  // n = 0 with a file stream means the whole file.
  if (e.n == 0 && e.stream.kind == StreamKind::kFile) {
    e.n = read_stream_file(e.stream.path).size();
  }
  if (e.n == 0) {
    throw std::invalid_argument("--n must be positive");
  }
  e.probes = c.probes;
  e.phis = c.phis;
  e.reservoir_k = c.reservoir_k;
  e.tolerance = c.tolerance;
  e.row0 = c.row0;
  e.replacement_ranks = c.replacement_ranks;
  e.workers = c.workers;
  return e;
}

namespace {

QuerySpec validated(QuerySpec q, uint64_t n) {
  if (q.t < 1 || q.t > n) {
    throw std::invalid_argument("query time " + std::to_string(q.t) + " outside [1, n]");
  }
  if (!(q.phi > 0.0 && q.phi <= 1.0)) {
    throw std::invalid_argument("query phi " + format_double(q.phi) + " outside (0, 1]");
  }
  return q;
}

QuerySpec parse_query_token(std::string_view token, uint64_t n) {
  QuerySpec q{n, 0.0};
  std::string_view phi_text = token;
  if (const auto colon = token.find(':'); colon != std::string_view::npos) {
    const std::string_view t_text = token.substr(0, colon);
    const auto [end, ec] = std::from_chars(t_text.data(), t_text.data() + t_text.size(), q.t);
    if (ec != std::errc() || end != t_text.data() + t_text.size()) {
      throw std::invalid_argument("bad query time in '" + std::string(token) + "'");
    }
    phi_text = token.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    q.phi = std::stod(std::string(phi_text), &used);
    if (used != phi_text.size()) {
      throw std::invalid_argument("trailing characters");
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("bad query phi in '" + std::string(token) + "'");
  }
  return validated(q, n);
}

std::string_view strip(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

}  // namespace

std::vector<QuerySpec> parse_queries(const std::string& text, uint64_t n) {
  std::vector<std::string> tokens;
  std::error_code ec;
  if (!text.empty() && std::filesystem::is_regular_file(text, ec)) {
    std::ifstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!strip(line).empty()) {
        tokens.emplace_back(strip(line));
      }
    }
  } else {
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (!strip(token).empty()) {
        tokens.emplace_back(strip(token));
      }
    }
  }
  std::vector<QuerySpec> out;
  for (const std::string& token : tokens) {
    out.push_back(parse_query_token(token, n));
  }
  return out;
}

CommandOutput cmd_run(const RunConfig& config) {
  const EvalConfig eval = to_eval_config(config);
  std::vector<QuerySpec> queries = parse_queries(config.queries, eval.n);
  if (queries.empty()) {
    const std::vector<uint64_t> probes =
        config.probes.empty() ? std::vector<uint64_t>{eval.n} : config.probes;
    const std::vector<double> phis = config.phis.empty() ? std::vector<double>{0.5} : config.phis;
    for (uint64_t t : probes) {
      for (double phi : phis) {
        queries.push_back(validated(QuerySpec{t, phi}, eval.n));
      }
    }
  }
  std::stable_sort(queries.begin(), queries.end(),
                   [](const QuerySpec& a, const QuerySpec& b) { return a.t < b.t; });

  SummaryDriver driver(eval, 0);
  StreamSource source(trial_stream(eval, 0));
  const uint64_t length = source.length();
  for (const QuerySpec& q : queries) {
    if (q.t > length) {
      throw std::invalid_argument("query time " + std::to_string(q.t) + " beyond stream length " +
                                  std::to_string(length));
    }
  }

  nlohmann::json answers = nlohmann::json::array();
  std::string csv = "t,phi,rho,answer,row\n";
  std::string human;
  std::size_t next = 0;
  while (!source.done() && next < queries.size()) {
    driver.insert(source.next());
    for (; next < queries.size() && queries[next].t == driver.t(); ++next) {
      const uint64_t rho = OnlineSummary<int64_t>::phi_to_rank(queries[next].phi, driver.t());
      const DriverAnswer a = driver.query(rho);
      answers.push_back({{"t", driver.t()},
                         {"phi", queries[next].phi},
                         {"rho", rho},
                         {"answer", a.value},
                         {"row", a.row},
                         {"guaranteed", a.guaranteed}});
      csv += format_csv_row({std::to_string(driver.t()), format_double(queries[next].phi),
                             std::to_string(rho), std::to_string(a.value), std::to_string(a.row)});
      human += "t=" + std::to_string(driver.t()) + " phi=" + format_double(queries[next].phi) +
               " rho=" + std::to_string(rho) + " -> " + std::to_string(a.value) +
               (driver.online() ? " (row " + std::to_string(a.row) + ")" : std::string()) + "\n";
    }
  }

  CommandOutput out;
  switch (config.format) {
    case OutputFormat::kJson: {
      nlohmann::json j{{"command", "run"}, {"config", nlohmann::json(eval)}, {"answers", answers}};
      out.body = j.dump(2) + "\n";
      break;
    }
    case OutputFormat::kCsv:
      out.body = csv;
      break;
    case OutputFormat::kHuman:
      out.body = human;
      break;
  }
  return out;
}

CommandOutput cmd_eval(const RunConfig& config) {
  const ErrorReport report = evaluate(to_eval_config(config));
  CommandOutput out;
  out.body = render_report(report, config.format);
  if (config.max_failure) {
    for (const ErrorAggregate& probe : report.by_probe) {
      if (probe.failure_fraction > *config.max_failure) {
        out.exit_code = kExitCheckFailed;
        out.diagnostics += "probe t=" + std::to_string(probe.t) + ": failure fraction " +
                           format_double(probe.failure_fraction) + " exceeds " +
                           format_double(*config.max_failure) + "\n";
      }
    }
  }
  return out;
}

CommandOutput execute(const RunConfig& config) {
  try {
    switch (config.subcommand) {
      case Subcommand::kRun:
        return cmd_run(config);
      case Subcommand::kEval:
        return cmd_eval(config);
      case Subcommand::kBench:
        return cmd_bench(config);
      case Subcommand::kGoodness:
        return cmd_goodness(config);
    }
  } catch (const std::invalid_argument& e) {
    return {kExitUsage, "", std::string("error: ") + e.what() + "\n"};
  } catch (const StreamError& e) {
    return {kExitUsage, "", std::string("error: ") + e.what() + "\n"};
  } catch (const std::out_of_range& e) {
    return {kExitUsage, "", std::string("error: ") + e.what() + "\n"};
  } catch (const std::exception& e) {
    return {kExitUsage, "", std::string("internal error: ") + e.what() + "\n"};
  }
  return {kExitUsage, "", "error: unknown subcommand\n"};
}

}  // namespace qs
