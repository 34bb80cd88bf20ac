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
#include "report_format.hpp"

namespace qs {

namespace {

nlohmann::json aggregate_json(const ErrorAggregate& agg) {
  nlohmann::json j{{"t", agg.t},
                   {"queries", agg.queries},
                   {"failures", agg.failures},
                   {"max_norm_err", agg.max_norm_err},
                   {"mean_norm_err", agg.mean_norm_err},
                   {"failure_fraction", agg.failure_fraction}};
  if (agg.phi) {
    j["phi"] = *agg.phi;
  }
  return j;
}

std::string render_csv(const ErrorReport& report) {
  std::string out = "t,phi,rho,answer,exact_rank,abs_err,norm_err\n";
  for (const QueryRecord& q : report.queries) {
    out += format_csv_row({std::to_string(q.t), format_double(q.phi), std::to_string(q.rho),
                           std::to_string(q.answer), std::to_string(q.exact_rank),
                           std::to_string(q.abs_err), format_double(q.norm_err)});
  }
  return out;
}

std::string render_human(const ErrorReport& report) {
  const EvalConfig& c = report.config;
  std::string out = "algo=" + algorithm_name(c.algorithm) + " epsilon=" + format_double(c.epsilon) +
                    " m=" + std::to_string(resolved_m(c)) + " n=" + std::to_string(c.n) +
                    " dist=" + distribution_name(c.stream) + " trials=" + std::to_string(c.trials) +
                    " tolerance=" + format_double(report.tolerance) + "\n";
  out += pad("t", 12) + pad("queries", 9) + pad("max_norm_err", 14) + pad("mean_norm_err", 15) +
         pad("failure_fraction", 18) + "\n";
  auto line = [&](const std::string& label, const ErrorAggregate& agg) {
    out += pad(label, 12) + pad(std::to_string(agg.queries), 9) +
           pad(format_double(agg.max_norm_err), 14) + pad(format_double(agg.mean_norm_err), 15) +
           pad(format_double(agg.failure_fraction), 18) + "\n";
  };
  for (const ErrorAggregate& agg : report.by_probe) {
    line(std::to_string(agg.t), agg);
  }
  line("all", report.overall);
  return out;
}

}  // namespace

nlohmann::json report_json(const ErrorReport& report) {
  nlohmann::json j;
  j["command"] = "eval";
  j["config"] = report.config;
  j["tolerance"] = report.tolerance;
  j["overall"] = aggregate_json(report.overall);
  j["by_probe"] = nlohmann::json::array();
  for (const ErrorAggregate& agg : report.by_probe) {
    j["by_probe"].push_back(aggregate_json(agg));
  }
  j["by_query"] = nlohmann::json::array();
  for (const ErrorAggregate& agg : report.by_query) {
    j["by_query"].push_back(aggregate_json(agg));
  }
  j["space"] = nlohmann::json::array();
  for (const TrialSpace& s : report.space) {
    j["space"].push_back({{"trial", s.trial}, {"seed", s.seed}, {"peak_tuples", s.peak_tuples}});
  }
  j["queries"] = nlohmann::json::array();
  for (const QueryRecord& q : report.queries) {
    j["queries"].push_back({{"trial", q.trial},
                            {"t", q.t},
                            {"phi", q.phi},
                            {"rho", q.rho},
                            {"answer", q.answer},
                            {"exact_rank", q.exact_rank},
                            {"abs_err", q.abs_err},
                            {"norm_err", q.norm_err},
                            {"row", q.row},
                            {"guaranteed", q.guaranteed}});
  }
  return j;
}

std::string render_report(const ErrorReport& report, OutputFormat format) {
  switch (format) {
    case OutputFormat::kJson:
      return report_json(report).dump(2) + "\n";
    case OutputFormat::kCsv:
      return render_csv(report);
    case OutputFormat::kHuman:
      return render_human(report);
  }
  return {};
}

}  // namespace qs
