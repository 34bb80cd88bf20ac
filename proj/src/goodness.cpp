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

// Instrumented sample-stream checks. Both modes keep whole streams in memory
// and are meant for test-scale n only.
//
// fixedn: Bernoulli(m/n) sampling of one stream. At each probe t records
//   size event   |S_t| > 2tm/n
//   rank event   |(n/m) rank(y, S_t) - rank(y, X_t)| > eps t / 8
// for y at the configured quantiles of X_t, one- and two-sided.
//
// online: records every row's joined stream Y_r and sample stream S_r and
// checks, when row r hands its quantiles to row r+1 (t = 2^r m) and for the
// active row at t = n,
//   E^a  |S_r| > 2m
//   E^b  some z among the first 2m samples has
//        |divisor(r) rank(z, S_r) - rank(z, Y_r)| > eps t / 8.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <map>

#include "qs/commands.hpp"
#include "qs/oracle.hpp"
#include "report_format.hpp"

namespace qs {

uint64_t goodness_scale_cap() {
  if (const char* env = std::getenv(kScaleCapEnv); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(kScaleCapEnv) + " is not an integer: " + env);
    }
  }
  return kDefaultScaleCap;
}

namespace {

double size_bound(uint64_t m) { return std::exp(-static_cast<double>(m) / 192.0); }

double rank_bound(double epsilon, uint64_t m) {
  return 2.0 * std::exp(-epsilon * epsilon * static_cast<double>(m) / 12288.0);
}

uint64_t count_le(const std::vector<int64_t>& sorted, int64_t y) {
  return static_cast<uint64_t>(std::upper_bound(sorted.begin(), sorted.end(), y) - sorted.begin());
}

// ---------------------------------------------------------------- fixed n --

struct RankTally {
  uint64_t upper = 0;
  uint64_t lower = 0;
};

struct ProbeTally {
  uint64_t size_events = 0;
  std::vector<RankTally> by_phi;
};

std::vector<uint64_t> fixedn_probes(const EvalConfig& config) {
  if (!config.probes.empty()) {
    return resolved_probes(config);
  }
  std::vector<uint64_t> probes{std::max<uint64_t>(1, (config.n + 63) / 64),
                               std::max<uint64_t>(1, config.n / 4), config.n};
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  return probes;
}

CommandOutput goodness_fixedn(const RunConfig& run, const EvalConfig& config) {
  const uint64_t m = resolved_m(config);
  if (m < 1 || m > config.n) {
    throw std::invalid_argument("goodness: need 1 <= m <= n");
  }
  const std::vector<uint64_t> probes = fixedn_probes(config);
  const std::vector<double> phis =
      config.phis.empty() ? std::vector<double>{0.25, 0.5, 0.75} : resolved_phis(config);

  std::vector<std::vector<ProbeTally>> per_trial(config.trials);
  parallel_for(config.trials, config.workers, [&](uint64_t trial) {
    std::vector<ProbeTally> tallies(probes.size(), ProbeTally{0, std::vector<RankTally>(phis.size())});
    BernoulliSampler sampler(Rate(m, config.n), trial_seed(config, trial));
    StreamSource source(trial_stream(config, trial));
    ExactOracle<int64_t> stream;
    ExactOracle<int64_t> sample;
    std::size_t next = 0;
    for (uint64_t t = 1; t <= config.n && next < probes.size(); ++t) {
      const int64_t x = source.next();
      stream.insert(x);
      if (sampler.offer()) {
        sample.insert(x);
      }
      if (probes[next] != t) {
        continue;
      }
      ProbeTally& tally = tallies[next++];
      // |S_t| > 2tm/n, compared exactly.
      if (static_cast<unsigned __int128>(sample.size()) * config.n >
          static_cast<unsigned __int128>(2) * t * m) {
        ++tally.size_events;
      }
      const double slack = config.epsilon * static_cast<double>(t) / 8.0;
      for (std::size_t i = 0; i < phis.size(); ++i) {
        const int64_t y = stream.select(OnlineSummary<int64_t>::phi_to_rank(phis[i], t));
        const double exact = static_cast<double>(stream.rank(y));
        const double in_sample = sample.empty() ? 0.0 : static_cast<double>(sample.rank(y));
        const double estimate = static_cast<double>(config.n) / static_cast<double>(m) * in_sample;
        if (estimate - exact > slack) {
          ++tally.by_phi[i].upper;
        } else if (exact - estimate > slack) {
          ++tally.by_phi[i].lower;
        }
      }
    }
    per_trial[trial] = std::move(tallies);
  });

  const auto trials = static_cast<double>(config.trials);
  nlohmann::json probes_json = nlohmann::json::array();
  std::string csv = "t,phi,p_size_event,p_rank_upper,p_rank_lower,p_rank_two_sided\n";
  std::string human;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    uint64_t size_events = 0;
    std::vector<RankTally> sums(phis.size());
    for (const auto& tallies : per_trial) {
      size_events += tallies[p].size_events;
      for (std::size_t i = 0; i < phis.size(); ++i) {
        sums[i].upper += tallies[p].by_phi[i].upper;
        sums[i].lower += tallies[p].by_phi[i].lower;
      }
    }
    const double p_size = static_cast<double>(size_events) / trials;
    nlohmann::json ranks = nlohmann::json::array();
    for (std::size_t i = 0; i < phis.size(); ++i) {
      const double up = static_cast<double>(sums[i].upper) / trials;
      const double lo = static_cast<double>(sums[i].lower) / trials;
      ranks.push_back({{"phi", phis[i]},
                       {"p_rank_upper", up},
                       {"p_rank_lower", lo},
                       {"p_rank_two_sided", up + lo}});
      csv += format_csv_row({std::to_string(probes[p]), format_double(phis[i]), format_double(p_size),
                             format_double(up), format_double(lo), format_double(up + lo)});
    }
    probes_json.push_back({{"t", probes[p]},
                           {"guaranteed", probes[p] * 64 >= config.n},
                           {"p_size_event", p_size},
                           {"size_events", size_events},
                           {"rank", ranks}});
    human += "t=" + std::to_string(probes[p]) + " P(|S_t| > 2tm/n)=" + format_double(p_size) +
             " (bound " + format_double(size_bound(m)) + ")\n";
  }

  CommandOutput out;
  switch (run.format) {
    case OutputFormat::kJson: {
      nlohmann::json j{{"command", "goodness"},
                       {"mode", "fixedn"},
                       {"epsilon", config.epsilon},
                       {"m", m},
                       {"n", config.n},
                       {"seed", config.seed},
                       {"trials", config.trials},
                       {"dist", distribution_name(config.stream)},
                       {"rate", Rate(m, config.n).to_string()},
                       {"bound_size_event", size_bound(m)},
                       {"bound_rank_event", rank_bound(config.epsilon, m)},
                       {"probes", probes_json}};
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

// ----------------------------------------------------------------- online --

struct RowStreams {
  std::vector<int64_t> joined;
  std::vector<int64_t> samples;
};

class RecordingTrace final : public OnlineTrace<int64_t> {
 public:
  void on_offer(unsigned row, const int64_t& value, bool sampled, bool /*inserted*/) override {
    RowStreams& s = rows[row];
    s.joined.push_back(value);
    if (sampled) {
      s.samples.push_back(value);
    }
  }
  void on_row_retired(unsigned row, uint64_t /*t*/) override { rows.erase(row); }

  std::map<unsigned, RowStreams> rows;
};

struct RowCheck {
  bool size_event = false;
  bool rank_event = false;
  bool good() const { return !size_event && !rank_event; }
};

RowCheck check_row(const RowStreams& streams, unsigned r, const OnlineConfig& config, uint64_t t) {
  RowCheck check;
  const bool exempt = r == 0 && config.row0 == Row0Sampling::kUnsampled;
  check.size_event = !exempt && streams.samples.size() > 2 * config.m;
  std::vector<int64_t> joined = streams.joined;
  std::vector<int64_t> samples = streams.samples;
  std::sort(joined.begin(), joined.end());
  std::sort(samples.begin(), samples.end());
  const double divisor = static_cast<double>(schedule::query_divisor(r, config.row0));
  const double slack = config.epsilon * static_cast<double>(t) / 8.0;
  const std::size_t first = std::min<std::size_t>(streams.samples.size(), 2 * config.m);
  for (std::size_t i = 0; i < first; ++i) {
    const int64_t z = streams.samples[i];
    const double scaled = divisor * static_cast<double>(count_le(samples, z));
    const double actual = static_cast<double>(count_le(joined, z));
    if (std::abs(scaled - actual) > slack) {
      check.rank_event = true;
      break;
    }
  }
  return check;
}

struct OnlineTrial {
  std::map<unsigned, RowCheck> handoff;
  unsigned final_row = 0;
  RowCheck final_check;
};

struct RowTally {
  uint64_t evaluated = 0;
  uint64_t size_events = 0;
  uint64_t rank_events = 0;
  uint64_t good = 0;

  void add(const RowCheck& c) {
    ++evaluated;
    size_events += c.size_event;
    rank_events += c.rank_event;
    good += c.good();
  }
};

nlohmann::json tally_json(const RowTally& t) {
  const double e = static_cast<double>(std::max<uint64_t>(t.evaluated, 1));
  return {{"evaluated", t.evaluated},
          {"p_size_event", static_cast<double>(t.size_events) / e},
          {"p_rank_event", static_cast<double>(t.rank_events) / e},
          {"p_good", static_cast<double>(t.good) / e}};
}

CommandOutput goodness_online(const RunConfig& run, const EvalConfig& config) {
  const uint64_t m = resolved_m(config);
  std::vector<OnlineTrial> results(config.trials);
  parallel_for(config.trials, config.workers, [&](uint64_t trial) {
    const OnlineConfig oc = online_config(config, trial_seed(config, trial));
    OnlineSummary<int64_t> summary(oc);
    RecordingTrace trace;
    summary.set_trace(&trace);
    StreamSource source(trial_stream(config, trial));
    OnlineTrial& out = results[trial];
    for (uint64_t t = 1; t <= config.n; ++t) {
      summary.insert(source.next());
      if (t % m == 0 && std::has_single_bit(t / m)) {
        const auto r = static_cast<unsigned>(std::countr_zero(t / m));
        out.handoff[r] = check_row(trace.rows.at(r), r, oc, t);
      }
    }
    out.final_row = summary.active_row();
    out.final_check = check_row(trace.rows.at(out.final_row), out.final_row, oc, config.n);
  });

  // d = log2(1/eps) rows before the active one must be good, plus the active
  // row itself at t = n.
  const auto d = static_cast<unsigned>(std::ceil(std::log2(1.0 / config.epsilon) - 1e-9));
  std::map<unsigned, RowTally> handoff;
  std::map<unsigned, RowTally> final_rows;
  uint64_t all_recent_good = 0;
  unsigned reference_row = results.front().final_row;
  for (const OnlineTrial& trial : results) {
    for (const auto& [r, check] : trial.handoff) {
      handoff[r].add(check);
    }
    final_rows[trial.final_row].add(trial.final_check);
    bool good = trial.final_check.good();
    for (unsigned back = 1; back <= d && back <= trial.final_row; ++back) {
      const auto it = trial.handoff.find(trial.final_row - back);
      good = good && (it == trial.handoff.end() || it->second.good());
    }
    all_recent_good += good;
  }
  std::vector<unsigned> recent;
  for (unsigned back = d; back >= 1; --back) {
    if (back <= reference_row) {
      recent.push_back(reference_row - back);
    }
  }
  recent.push_back(reference_row);

  CommandOutput out;
  nlohmann::json rows = nlohmann::json::array();
  std::string csv = "r,when,evaluated,p_size_event,p_rank_event,p_good,recent\n";
  std::string human;
  auto emit = [&](unsigned r, const char* when, const RowTally& tally) {
    const bool is_recent = std::find(recent.begin(), recent.end(), r) != recent.end();
    nlohmann::json j = tally_json(tally);
    j["r"] = r;
    j["when"] = when;
    j["recent"] = is_recent;
    j["exempt"] = r == 0 && config.row0 == Row0Sampling::kUnsampled;
    csv += format_csv_row({std::to_string(r), when, std::to_string(tally.evaluated),
                           format_double(j["p_size_event"].get<double>()),
                           format_double(j["p_rank_event"].get<double>()),
                           format_double(j["p_good"].get<double>()), is_recent ? "1" : "0"});
    human += "row " + std::to_string(r) + " (" + when + ")" + (is_recent ? " [recent]" : "") +
             ": P(E^a)=" + format_double(j["p_size_event"].get<double>()) +
             " P(E^b)=" + format_double(j["p_rank_event"].get<double>()) + "\n";
    rows.push_back(std::move(j));
  };
  for (const auto& [r, tally] : handoff) {
    emit(r, "handoff", tally);
  }
  for (const auto& [r, tally] : final_rows) {
    emit(r, "final", tally);
  }
  const double p_all = static_cast<double>(all_recent_good) / static_cast<double>(config.trials);
  human += "d=" + std::to_string(d) + " P(all recent rows good)=" + format_double(p_all) + "\n";

  switch (run.format) {
    case OutputFormat::kJson: {
      nlohmann::json j{{"command", "goodness"},
                       {"mode", "online"},
                       {"epsilon", config.epsilon},
                       {"m", m},
                       {"n", config.n},
                       {"seed", config.seed},
                       {"trials", config.trials},
                       {"dist", distribution_name(config.stream)},
                       {"d", d},
                       {"recent_rows", recent},
                       {"p_all_recent_good", p_all},
                       {"bound_size_event", size_bound(m)},
                       {"bound_rank_event_per_sample", rank_bound(config.epsilon, m)},
                       {"bound_rank_event_union",
                        std::min(1.0, 2.0 * static_cast<double>(m) * rank_bound(config.epsilon, m))},
                       {"rows", rows}};
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

}  // namespace

CommandOutput cmd_goodness(const RunConfig& run) {
  const EvalConfig config = to_eval_config(run);
  const uint64_t cap = goodness_scale_cap();
  if (config.n > cap) {
    throw std::invalid_argument("goodness: n = " + std::to_string(config.n) + " exceeds the " +
                                kScaleCapEnv + " cap of " + std::to_string(cap));
  }
  switch (config.algorithm) {
    case Algorithm::kFixedN:
      return goodness_fixedn(run, config);
    case Algorithm::kOnline:
      return goodness_online(run, config);
    default:
      throw std::invalid_argument("goodness supports --algo fixedn or online");
  }
}

}  // namespace qs
