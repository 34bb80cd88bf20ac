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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits 1 if
// any gating criterion fails. Expected ranks come from sorting the prefix,
// never from the summaries themselves.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "brute.hpp"
#include "qs/commands.hpp"
#include "qs/gk_summary.hpp"
#include "qs/online_summary.hpp"
#include "qs/sampler.hpp"
#include "qs/streams.hpp"

namespace {

using qs::GkSummary;
using qs::OnlineConfig;
using qs::OnlineSummary;
using qs::StreamKind;
using qs::StreamSpec;

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Sorted copy of a prefix; rank distance under ties is the distance from the
// target to [count(< y) + 1, count(<= y)].
class SortedPrefix {
 public:
  SortedPrefix(const std::vector<int64_t>& items, uint64_t t)
      : sorted_(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(t)) {
    std::sort(sorted_.begin(), sorted_.end());
  }

  double distance(int64_t y, double target) const {
    const auto lo = static_cast<double>(std::lower_bound(sorted_.begin(), sorted_.end(), y) - sorted_.begin()) + 1;
    const auto hi = static_cast<double>(std::upper_bound(sorted_.begin(), sorted_.end(), y) - sorted_.begin());
    if (hi < lo) return 1e300;  // y never arrived
    return std::max({lo - target, target - hi, 0.0});
  }

 private:
  std::vector<int64_t> sorted_;
};

StreamSpec spec(StreamKind kind, uint64_t n, uint64_t seed) {
  StreamSpec s;
  s.kind = kind;
  s.n = n;
  s.seed = seed;
  return s;
}

OnlineConfig online_config(double eps, uint64_t m, uint64_t seed) {
  OnlineConfig c;
  c.epsilon = eps;
  c.m = m;
  c.seed = seed;
  return c;
}

std::string fmt(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

Verdict gk_contract() {
  const uint64_t n = 100'000;
  uint64_t violations = 0;
  uint64_t checked = 0;
  for (double eps : {0.1, 0.01}) {
    for (uint64_t seed = 1; seed <= 100; ++seed) {
      const auto items = qs::generate_stream(spec(StreamKind::kUniform, n, seed));
      GkSummary<int64_t> gk(eps);
      for (int64_t x : items) gk.insert(x);
      const SortedPrefix oracle(items, n);
      for (uint64_t k = 1; k <= 99; ++k) {
        const uint64_t rho = k * n / 100;
        ++checked;
        violations += oracle.distance(gk.query(rho), static_cast<double>(rho)) > eps * n;
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checked) + " queries"};
}

Verdict gk_exhaustive() {
  const double eps = 0.5;
  uint64_t violations = 0;
  uint64_t checked = 0;
  // Every prefix of every length-8 stream covers all shorter streams too.
  for (uint32_t code = 0; code < (1u << 16); ++code) {
    GkSummary<int64_t> gk(eps);
    std::vector<int64_t> seen;
    for (int i = 0; i < 8; ++i) {
      const int64_t x = 1 + ((code >> (2 * i)) & 3);
      gk.insert(x);
      seen.push_back(x);
      const uint64_t t = seen.size();
      for (uint64_t rho = 1; rho <= t; ++rho) {
        ++checked;
        violations += static_cast<double>(brute::rank_error(seen, gk.query(rho), rho)) > eps * t;
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checked) + " queries"};
}

Verdict sample_size_tail() {
  const uint64_t m = 1000;
  const uint64_t n = 64'000;
  const uint64_t trials = 2000;
  uint64_t blowups = 0;
  for (uint64_t trial = 0; trial < trials; ++trial) {
    qs::BernoulliSampler sampler(qs::Rate(m, n), 1000 + trial);
    for (uint64_t i = 0; i < n; ++i) sampler.offer();
    blowups += sampler.accepted() > 2 * m;
  }
  const double p = static_cast<double>(blowups) / trials;
  return {p <= 0.02, "P(|S_n| > 2m) = " + fmt(p) + " over " + std::to_string(trials) +
                         " trials (bound " + fmt(std::exp(-static_cast<double>(m) / 192)) + ")"};
}

struct ScheduleResult {
  uint64_t mismatches = 0;
  uint64_t max_live = 0;
  uint64_t max_gk_insertions = 0;
  std::string first_problem;

  void fail(const std::string& what) {
    if (mismatches++ == 0) first_problem = what;
  }
};

class RetirementTrace : public qs::OnlineTrace<int64_t> {
 public:
  void on_offer(unsigned, const int64_t&, bool, bool) override {}
  void on_row_retired(unsigned row, uint64_t t) override { retired.emplace_back(row, t); }
  std::vector<std::pair<unsigned, uint64_t>> retired;
};

// Criterion 4 run, shared with the insertion-cap half of criterion 5.
const ScheduleResult& schedule_run() {
  static const ScheduleResult result = [] {
    ScheduleResult res;
    const uint64_t m = 64;
    const uint64_t n = uint64_t{1} << 21;
    // Windows written out directly: row r >= 1 is live on
    // [2^(r-1) m + 1, 2^r 32m] and active on [2^r 16m + 1, 2^r 32m].
    auto live = [m](unsigned r, uint64_t t) {
      const uint64_t first = r == 0 ? 1 : (uint64_t{1} << (r - 1)) * m + 1;
      return t >= first && t <= (uint64_t{1} << r) * 32 * m;
    };
    auto active = [m](unsigned r, uint64_t t) {
      const uint64_t first = r == 0 ? 1 : (uint64_t{1} << r) * 16 * m + 1;
      return t >= first && t <= (uint64_t{1} << r) * 32 * m;
    };
    OnlineSummary<int64_t> s(online_config(0.5, m, 11));
    RetirementTrace trace;
    s.set_trace(&trace);
    const auto items = qs::generate_stream(spec(StreamKind::kUniform, n, 11));
    for (uint64_t t = 1; t <= n; ++t) {
      s.insert(items[t - 1]);
      // After step t the summary serves step t + 1.
      const uint64_t next = t + 1;
      std::vector<unsigned> want_live;
      std::vector<unsigned> want_active;
      for (unsigned r = 0; r < 40; ++r) {
        if (live(r, next)) want_live.push_back(r);
        if (active(r, next)) want_active.push_back(r);
      }
      const qs::OnlineStats st = s.stats();
      if (want_active.size() != 1) res.fail("schedule has " + std::to_string(want_active.size()) + " active rows");
      std::vector<unsigned> got_live;
      unsigned flagged_active = 0;
      for (const qs::RowStats& row : st.rows) {
        got_live.push_back(row.r);
        flagged_active += row.active;
        if (row.active && row.r != st.active) res.fail("active flag on the wrong row");
        if (row.r >= 1) {
          const uint64_t total = (uint64_t{1} << (row.r - 1)) * m;
          const uint64_t birth = total;
          if (row.replacement_total != total) res.fail("replacement length of row " + std::to_string(row.r));
          if (row.replacement_consumed != std::min(t - birth, total)) {
            res.fail("replacement consumption of row " + std::to_string(row.r) + " at t " + std::to_string(t));
          }
          res.max_gk_insertions = std::max(res.max_gk_insertions, row.gk_insertions);
        }
      }
      if (flagged_active != 1) res.fail("not exactly one active row at t " + std::to_string(t));
      if (got_live != want_live) res.fail("live rows at t " + std::to_string(t));
      if (want_active.size() == 1 && st.active != want_active[0]) res.fail("active row at t " + std::to_string(t));
      res.max_live = std::max<uint64_t>(res.max_live, st.rows.size());
    }
    for (const auto& [r, t] : trace.retired) {
      if (t != (uint64_t{1} << r) * 32 * m) res.fail("retirement time of row " + std::to_string(r));
    }
    for (const qs::RowStats& row : s.retired_rows()) {
      if (row.r >= 1) {
        res.max_gk_insertions = std::max(res.max_gk_insertions, row.gk_insertions);
        if (row.replacement_consumed != row.replacement_total) res.fail("unconsumed replacement");
      }
    }
    if (res.max_live > 6) res.fail("more than 6 live rows");
    return res;
  }();
  return result;
}

Verdict schedule_arithmetic() {
  const ScheduleResult& res = schedule_run();
  std::string detail = std::to_string(res.mismatches) + " mismatches, max live rows " + std::to_string(res.max_live);
  if (res.mismatches > 0) detail += ", first: " + res.first_problem;
  return {res.mismatches == 0 && res.max_live <= 6, detail};
}

Verdict space_cap() {
  const uint64_t m = 64;
  const uint64_t cap = 2 * m;
  const uint64_t inserted = schedule_run().max_gk_insertions;

  const double eps = 0.1;
  const uint64_t big_m = 5120;
  const uint64_t n_small = 1'000'000;
  const uint64_t n_big = 10'000'000;
  const uint64_t row0_end = 32 * big_m;
  OnlineSummary<int64_t> s(online_config(eps, big_m, 1));
  qs::StreamSource source(spec(StreamKind::kUniform, n_big, 1));
  uint64_t peak_small = 0;
  uint64_t peak_big = 0;
  for (uint64_t t = 1; t <= n_big; ++t) {
    s.insert(source.next());
    if (t <= row0_end) continue;
    const uint64_t tuples = s.total_tuples();
    if (t <= n_small) peak_small = std::max(peak_small, tuples);
    peak_big = std::max(peak_big, tuples);
  }
  const double rel = std::abs(static_cast<double>(peak_big) - static_cast<double>(peak_small)) /
                     static_cast<double>(peak_small);
  return {inserted <= cap && rel <= 0.01,
          "max gk insertions " + std::to_string(inserted) + " (cap " + std::to_string(cap) + "), peak tuples " +
              std::to_string(peak_small) + " at 1e6 vs " + std::to_string(peak_big) + " at 1e7, relative " + fmt(rel)};
}

Verdict end_to_end_error() {
  const double eps = 0.1;
  const uint64_t m = 5120;
  const uint64_t n = uint64_t{1} << 22;
  const uint64_t trials = 50;
  const std::vector<uint64_t> probes{m / 2, 16 * m, 32 * m, 32 * m + 1, 64 * m, 32 * 16 * m + 1, n};
  std::vector<double> phis;
  for (int k = 1; k <= 19; ++k) phis.push_back(0.05 * k);

  double worst = 0.0;
  std::string worst_at;
  for (StreamKind kind : {StreamKind::kSorted, StreamKind::kReversed, StreamKind::kUniform}) {
    std::vector<uint64_t> failures(probes.size(), 0);
    for (uint64_t trial = 0; trial < trials; ++trial) {
      const auto items = qs::generate_stream(spec(kind, n, 500 + trial));
      OnlineSummary<int64_t> s(online_config(eps, m, 900 + trial));
      uint64_t t = 0;
      for (std::size_t p = 0; p < probes.size(); ++p) {
        while (t < probes[p]) s.insert(items[t++]);
        const SortedPrefix oracle(items, t);
        for (double phi : phis) {
          const int64_t y = s.query(OnlineSummary<int64_t>::phi_to_rank(phi, t));
          failures[p] += oracle.distance(y, phi * static_cast<double>(t)) > eps * static_cast<double>(t);
        }
      }
    }
    const std::string name = qs::distribution_name(spec(kind, n, 0));
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double frac = static_cast<double>(failures[p]) / static_cast<double>(trials * phis.size());
      if (frac >= worst) {
        worst = frac;
        worst_at = name + " t=" + std::to_string(probes[p]);
      }
    }
  }
  return {worst < 0.05, "worst failure fraction " + fmt(worst) + " (" + worst_at + ")"};
}

Verdict early_queries() {
  const double eps = 0.1;
  const uint64_t m = 5120;
  uint64_t mismatches = 0;
  uint64_t checked = 0;
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    OnlineSummary<int64_t> s(online_config(eps, m, seed));
    GkSummary<int64_t> gk(eps / 8);
    const auto items = qs::generate_stream(spec(StreamKind::kUniform, m / 2, seed));
    for (uint64_t t = 1; t <= m / 2; ++t) {
      s.insert(items[t - 1]);
      gk.insert(items[t - 1]);
      const uint64_t step = t < 64 ? 1 : t / 32;
      for (uint64_t rho = 1; rho <= t; rho += step) {
        ++checked;
        mismatches += s.query(rho) != gk.query(rho);
      }
      ++checked;
      mismatches += s.query(t) != gk.query(t);
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in " + std::to_string(checked) + " queries"};
}

std::string run_cli(const std::string& args) {
  const std::string command = std::string(QS_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) return "<popen failed>";
  std::string out;
  char buffer[4096];
  std::size_t got = 0;
  while ((got = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) out.append(buffer, got);
  const int status = ::pclose(pipe);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) out += "<exit " + std::to_string(status) + ">";
  return out;
}

Verdict reproducibility() {
  std::vector<qs::RunConfig> configs;
  qs::RunConfig eval;
  eval.subcommand = qs::Subcommand::kEval;
  eval.algorithm = qs::Algorithm::kOnline;
  eval.n = uint64_t{1} << 20;
  eval.trials = 3;
  eval.dist = "zipf";
  configs.push_back(eval);
  eval.format = qs::OutputFormat::kCsv;
  eval.algorithm = qs::Algorithm::kFixedN;
  configs.push_back(eval);
  qs::RunConfig bench;
  bench.subcommand = qs::Subcommand::kBench;
  bench.algorithm = qs::Algorithm::kOnline;
  bench.n = 1'000'000;
  bench.compare_n = 2'000'000;
  configs.push_back(bench);
  bench.format = qs::OutputFormat::kCsv;
  configs.push_back(bench);

  uint64_t differing = 0;
  for (const qs::RunConfig& c : configs) {
    differing += qs::execute(c).body != qs::execute(c).body;
  }
  const std::vector<std::string> cli{
      "eval --algo online --n 200000 --m 1024 --trials 4 --dist uniform",
      "eval --algo gk --n 100000 --trials 2 --format csv",
      "bench --algo online --n 500000 --m 1024 --format csv",
  };
  for (const std::string& args : cli) {
    const std::string a = run_cli(args);
    differing += a.empty() || a != run_cli(args);
  }
  return {differing == 0, std::to_string(differing) + " of " + std::to_string(configs.size() + cli.size()) +
                              " commands differed between runs"};
}

Verdict throughput() {
  const double eps = 0.1;
  const uint64_t m = 5120;
  const uint64_t n = 10'000'000;
  const auto items = qs::generate_stream(spec(StreamKind::kUniform, n, 1));
  OnlineSummary<int64_t> s(online_config(eps, m, 1));
  const auto start = std::chrono::steady_clock::now();
  for (int64_t x : items) s.insert(x);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double rate = static_cast<double>(n) / seconds;
  // One step feeds at most a few replacement items per live row plus a
  // replacement build of 8/eps values; 16/eps leaves room for both.
  const auto step_bound = static_cast<uint64_t>(16 / eps);
  return {rate >= 1e6 && s.max_step_ops() <= step_bound,
          fmt(std::round(rate)) + " items/sec, max step ops " + std::to_string(s.max_step_ops()) + " (bound " +
              std::to_string(step_bound) + ")"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    bool gating;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "gk deterministic contract", true, gk_contract},
      {2, "gk exhaustive small streams", true, gk_exhaustive},
      {3, "sample size tail", true, sample_size_tail},
      {4, "online schedule arithmetic", true, schedule_arithmetic},
      {5, "space cap and flatness", true, space_cap},
      {6, "end-to-end error", true, end_to_end_error},
      {7, "row 0 early queries", true, early_queries},
      {8, "reproducibility", true, reproducibility},
      {9, "throughput (non-gating)", false, throughput},
  };
  bool ok = true;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.name << ": " << v.detail << " ["
              << fmt(std::round(seconds * 10) / 10) << " s]" << std::endl;
    if (c.gating && !v.pass) ok = false;
  }
  return ok ? 0 : 1;
}
