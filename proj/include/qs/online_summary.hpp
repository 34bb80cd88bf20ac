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

// Fully online randomized quantile summary.
//
// The stream is covered by rows r = 0, 1, 2, ... where row r summarizes the
// first 2^r * 32m items. Row r >= 1 starts at the end of timestep 2^(r-1) m;
// the items it missed are replaced by a synthetic prefix built from ceil(8/eps)
// quantiles of row r-1, each repeated about 2^(r-1) eps m / 8 times. Row r
// samples its input at rate 1/(2^r * 32), feeds at most 2m samples into its
// own GK summary and answers queries in timesteps 2^r 16m + 1 .. 2^r 32m.
// Row 0 is unsampled and answers queries in timesteps 1 .. 32m.
//
// Timeline for one row r >= 1 (t_r = 2^(r-1) m):
//
//   t_r        2 t_r            2^r 16m          2^r 32m
//    |----------|-------------------|----------------|
//    born       replacement fully   becomes active   retired
//               consumed
//
// At most six rows are live at any time.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qs/fixed_n_summary.hpp"
#include "qs/gk_summary.hpp"
#include "qs/sampler.hpp"

namespace qs {

// How row 0 treats its input. kUnsampled feeds every item to G_0 and queries
// it with divisor 1. kSampled treats row 0 like every other row (rate 1/32,
// divisor 32, 2m cap); it is kept for experiments and carries no guarantee
// for early queries.
enum class Row0Sampling { kUnsampled, kSampled };

// How the replacement prefix of row r picks its query ranks into G_(r-1).
// kRowScaled asks for the rank that block q of the prefix ends at, expressed
// in G_(r-1)'s own sample scale: q * (eps/8) * 2^(r-1) m / divisor(r-1).
// kLiteral uses max(1, round(q eps m / 512)) for every row.
enum class ReplacementRanks { kRowScaled, kLiteral };

struct OnlineConfig {
  double epsilon = 0.1;
  uint64_t m = 5120;
  uint64_t seed = 0;
  Row0Sampling row0 = Row0Sampling::kUnsampled;
  ReplacementRanks replacement_ranks = ReplacementRanks::kRowScaled;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 0.5)) {
      throw std::invalid_argument("OnlineConfig: epsilon must be in (0, 1/2], got " +
                                  std::to_string(epsilon));
    }
    if (m < 1 || m > (uint64_t{1} << 40)) {
      throw std::invalid_argument("OnlineConfig: m must be in [1, 2^40]");
    }
  }
};

// Proven-sufficient row size, ceil(400000 ln(1/eps) / eps^2).
inline uint64_t proven_online_row_size(double epsilon) {
  return static_cast<uint64_t>(std::ceil(400000.0 * std::log(1.0 / epsilon) / (epsilon * epsilon)));
}

// Row schedule arithmetic. All values are timesteps (1-based clock).
namespace schedule {

// Clock values at or beyond this are out of range.
inline constexpr uint64_t kMaxClock = uint64_t{1} << 62;

inline uint64_t checked_mul(uint64_t a, uint64_t b) {
  uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw std::overflow_error("row schedule overflows 64 bits");
  }
  return out;
}

inline uint64_t pow2(unsigned r) {
  if (r >= 64) {
    throw std::overflow_error("row schedule: 2^" + std::to_string(r) + " overflows 64 bits");
  }
  return uint64_t{1} << r;
}

// Row r is allocated at the end of this timestep (0 for row 0).
inline uint64_t birth(unsigned r, uint64_t m) { return r == 0 ? 0 : checked_mul(pow2(r - 1), m); }

// Row r is active from activation(r) + 1 on (0 for row 0).
inline uint64_t activation(unsigned r, uint64_t m) {
  return r == 0 ? 0 : checked_mul(checked_mul(pow2(r), 16), m);
}

// Row r is freed at the end of this timestep.
inline uint64_t retirement(unsigned r, uint64_t m) { return checked_mul(checked_mul(pow2(r), 32), m); }

inline bool is_live(unsigned r, uint64_t t, uint64_t m) {
  return t > birth(r, m) && t <= retirement(r, m);
}

// Row that is active during timestep t. Once timestep t has been processed,
// queries go to active_row(t + 1), since the handover happens at the end of
// the step.
inline unsigned active_row(uint64_t t, uint64_t m) {
  unsigned r = 0;
  while (t > retirement(r, m)) {
    ++r;
  }
  return r;
}

// Implicit length of row r's replacement prefix, 2^(r-1) m.
inline uint64_t replacement_length(unsigned r, uint64_t m) { return birth(r, m); }

inline Rate row_rate(unsigned r, Row0Sampling row0) {
  if (r == 0 && row0 == Row0Sampling::kUnsampled) {
    return Rate::one();
  }
  return Rate::inverse_power_of_two_times_32(r);
}

inline uint64_t query_divisor(unsigned r, Row0Sampling row0) { return row_rate(r, row0).den(); }

// Number of replacement quantiles, ceil(8/eps).
inline uint64_t replacement_quantiles(double epsilon) {
  return static_cast<uint64_t>(std::ceil(8.0 / epsilon - 1e-9));
}

}  // namespace schedule

// Replacement prefix R_r stored as its ceil(8/eps) distinct values. Item i
// (1-based) is values[ceil(i / dup) - 1]; the last block is stretched or cut
// so the implicit length is exactly total().
template <typename T>
class ReplacementQueue {
 public:
  ReplacementQueue(std::vector<T> values, uint64_t dup, uint64_t total)
      : values_(std::move(values)), dup_(dup), total_(total) {
    if (values_.empty() || dup_ == 0) {
      throw std::invalid_argument("ReplacementQueue: needs values and a positive duplication count");
    }
  }

  const T& item(uint64_t i) const {
    if (i < 1 || i > total_) {
      throw std::out_of_range("ReplacementQueue: item " + std::to_string(i) + " outside [1, " +
                              std::to_string(total_) + "]");
    }
    const uint64_t block = std::min<uint64_t>((i - 1) / dup_, values_.size() - 1);
    return values_[block];
  }

  const T& next() { return item(++consumed_); }

  bool exhausted() const { return consumed_ == total_; }
  uint64_t consumed() const { return consumed_; }
  uint64_t total() const { return total_; }
  uint64_t dup() const { return dup_; }
  const std::vector<T>& values() const { return values_; }

 private:
  std::vector<T> values_;
  uint64_t dup_;
  uint64_t total_;
  uint64_t consumed_ = 0;
};

// Ranks into G_(r-1) used to build R_r, for q = 1 .. ceil(8/eps).
inline std::vector<uint64_t> replacement_ranks(double epsilon, uint64_t m, unsigned r,
                                               ReplacementRanks mode, Row0Sampling row0) {
  if (r < 1) {
    throw std::invalid_argument("replacement_ranks: row 0 has no replacement prefix");
  }
  const uint64_t k = schedule::replacement_quantiles(epsilon);
  const double total = static_cast<double>(schedule::replacement_length(r, m));
  const double prev_divisor = static_cast<double>(schedule::query_divisor(r - 1, row0));
  std::vector<uint64_t> ranks;
  ranks.reserve(k);
  for (uint64_t q = 1; q <= k; ++q) {
    const double qd = static_cast<double>(q);
    const double rho = mode == ReplacementRanks::kLiteral
                           ? qd * epsilon * static_cast<double>(m) / 512.0
                           : qd * (epsilon / 8.0) * total / prev_divisor;
    ranks.push_back(std::max<uint64_t>(1, static_cast<uint64_t>(std::llround(rho))));
  }
  return ranks;
}

// Wraps quantile values as R_r: dup = round(2^(r-1) eps m / 8) copies each,
// total length 2^(r-1) m.
template <typename T>
ReplacementQueue<T> make_replacement_queue(std::vector<T> values, double epsilon, uint64_t m,
                                           unsigned r) {
  const uint64_t total = schedule::replacement_length(r, m);
  const auto dup = std::max<uint64_t>(
      1, static_cast<uint64_t>(std::llround(static_cast<double>(total) * epsilon / 8.0)));
  return ReplacementQueue<T>(std::move(values), dup, total);
}

// Builds R_r from the summary of row r-1 at timestep 2^(r-1) m.
template <typename T, typename Compare>
ReplacementQueue<T> generate_replacement(const GkSummary<T, Compare>& previous, double epsilon,
                                         uint64_t m, unsigned r,
                                         ReplacementRanks mode = ReplacementRanks::kRowScaled,
                                         Row0Sampling row0 = Row0Sampling::kUnsampled) {
  if (previous.empty()) {
    throw std::logic_error("generate_replacement: previous row summary is empty");
  }
  std::vector<T> values;
  for (uint64_t rho : replacement_ranks(epsilon, m, r, mode, row0)) {
    values.push_back(previous.query(rho));
  }
  return make_replacement_queue(std::move(values), epsilon, m, r);
}

// Observer for instrumented runs. Receives every item offered to a row's
// sampler, in processing order.
template <typename T>
class OnlineTrace {
 public:
  virtual ~OnlineTrace() = default;
  virtual void on_offer(unsigned row, const T& value, bool sampled, bool inserted) = 0;
  virtual void on_row_born(unsigned /*row*/, uint64_t /*t*/) {}
  virtual void on_row_retired(unsigned /*row*/, uint64_t /*t*/) {}
};

struct RowStats {
  unsigned r = 0;
  bool active = false;
  uint64_t samples = 0;
  uint64_t gk_insertions = 0;
  uint64_t tuples = 0;
  uint64_t replacement_consumed = 0;
  uint64_t replacement_total = 0;

  bool operator==(const RowStats&) const = default;
};

struct OnlineStats {
  uint64_t t = 0;
  unsigned active = 0;
  std::vector<RowStats> rows;
  uint64_t total_tuples = 0;

  bool operator==(const OnlineStats&) const = default;
};

// Rank in a row's GK summary that corresponds to global rank rho.
inline uint64_t scaled_query_rank(uint64_t rho, uint64_t divisor, uint64_t count) {
  return std::clamp<uint64_t>(round_ratio(rho, divisor), 1, std::max<uint64_t>(count, 1));
}

// Copy of the active row, queryable from another thread.
template <typename T, typename Compare = std::less<T>>
class OnlineSnapshot {
 public:
  OnlineSnapshot(GkSummary<T, Compare> gk, uint64_t divisor, uint64_t t, unsigned row)
      : gk_(std::move(gk)), divisor_(divisor), t_(t), row_(row) {}

  const T& query(uint64_t rho) const {
    return gk_.query(scaled_query_rank(rho, divisor_, gk_.count()));
  }

  uint64_t t() const { return t_; }
  unsigned row() const { return row_; }

 private:
  GkSummary<T, Compare> gk_;
  uint64_t divisor_;
  uint64_t t_;
  unsigned row_;
};

template <typename T, typename Compare = std::less<T>>
class OnlineSummary {
 public:
  explicit OnlineSummary(OnlineConfig config, Compare compare = Compare())
      : config_((config.validate(), config)), compare_(std::move(compare)) {
    rows_.push_back(make_row(0));
  }

  void insert(const T& x) {
    if (t_ + 1 >= schedule::kMaxClock) {
      throw std::overflow_error("OnlineSummary: clock limit reached");
    }
    const uint64_t t = ++t_;
    const uint64_t m = config_.m;
    step_ops_ = 0;

    for (Row& row : rows_) {
      offer(row, x);
      if (row.replacement && t > schedule::birth(row.r, m) &&
          t <= 2 * schedule::birth(row.r, m)) {
        // One replacement item per timestep whether or not it is sampled.
        const T& item = row.replacement->next();
        offer(row, item, /*replacement=*/true);
      }
    }

    if (t % m == 0 && std::has_single_bit(t / m)) {
      const auto r = static_cast<unsigned>(std::countr_zero(t / m)) + 1;
      Row child = make_row(r);
      const Row& parent = find_row(r - 1);
      if (!parent.gk.empty()) {
        child.replacement = generate_replacement(parent.gk, config_.epsilon, m, r,
                                                 config_.replacement_ranks, config_.row0);
      } else {
        child.replacement = fallback_replacement(r);
      }
      step_ops_ += child.replacement->values().size();
      rows_.push_back(std::move(child));
      if (trace_) {
        trace_->on_row_born(r, t);
      }
    }
    if (t % (16 * m) == 0 && t / (16 * m) >= 2 && std::has_single_bit(t / (16 * m))) {
      active_ = static_cast<unsigned>(std::countr_zero(t / (16 * m)));
    }
    if (t % (32 * m) == 0 && std::has_single_bit(t / (32 * m))) {
      const auto r = static_cast<unsigned>(std::countr_zero(t / (32 * m)));
      if (rows_.front().r != r) {
        throw std::logic_error("OnlineSummary: retiring a row out of order");
      }
      retired_.push_back(row_stats(rows_.front()));
      rows_.erase(rows_.begin());
      if (trace_) {
        trace_->on_row_retired(r, t);
      }
    }
    max_step_ops_ = std::max(max_step_ops_, step_ops_);
  }

  const T& query(uint64_t rho) const {
    const Row& row = active();
    if (row.gk.empty()) {
      throw std::runtime_error("OnlineSummary: active row " + std::to_string(row.r) +
                               " holds no samples");
    }
    return row.gk.query(scaled_query_rank(rho, divisor(row.r), row.gk.count()));
  }

  const T& query_phi(double phi) const {
    if (!(phi > 0.0 && phi <= 1.0)) {
      throw std::invalid_argument("OnlineSummary: phi must be in (0, 1]");
    }
    return query(phi_to_rank(phi, t_));
  }

  static uint64_t phi_to_rank(double phi, uint64_t t) {
    return std::max<uint64_t>(1, static_cast<uint64_t>(std::llround(phi * static_cast<double>(t))));
  }

  OnlineSnapshot<T, Compare> snapshot() const {
    const Row& row = active();
    return OnlineSnapshot<T, Compare>(row.gk, divisor(row.r), t_, row.r);
  }

  OnlineStats stats() const {
    OnlineStats out;
    out.t = t_;
    out.active = active_;
    for (const Row& row : rows_) {
      out.rows.push_back(row_stats(row));
      out.total_tuples += out.rows.back().tuples;
    }
    return out;
  }

  // Final state of every row freed so far, in retirement order.
  const std::vector<RowStats>& retired_rows() const { return retired_; }

  uint64_t total_tuples() const {
    uint64_t total = 0;
    for (const Row& row : rows_) {
      total += row.gk.tuple_count();
    }
    return total;
  }

  // GK inserts plus GK queries performed by the most recent insert(), and the
  // maximum over the run so far.
  uint64_t last_step_ops() const { return step_ops_; }
  uint64_t max_step_ops() const { return max_step_ops_; }

  const OnlineConfig& config() const { return config_; }
  uint64_t t() const { return t_; }
  unsigned active_row() const { return active_; }
  std::size_t live_rows() const { return rows_.size(); }

  const GkSummary<T, Compare>& row_summary(unsigned r) const { return find_row(r).gk; }

  // Not owned; must outlive the summary or be reset to nullptr.
  void set_trace(OnlineTrace<T>* trace) { trace_ = trace; }

 private:
  struct Row {
    unsigned r;
    GkSummary<T, Compare> gk;
    BernoulliSampler sampler;
    BernoulliSampler replacement_sampler;
    std::optional<ReplacementQueue<T>> replacement;
    // Items accepted by either coin, counted even once G_r is full.
    uint64_t samples = 0;
    uint64_t gk_insertions = 0;
  };

  Row make_row(unsigned r) const {
    const Rate rate = schedule::row_rate(r, config_.row0);
    return Row{r,
               GkSummary<T, Compare>(config_.epsilon / 8.0, compare_),
               BernoulliSampler(rate, config_.seed, 2 * uint64_t{r}),
               BernoulliSampler(rate, config_.seed, 2 * uint64_t{r} + 1),
               std::nullopt};
  }

  // Row r-1 took no samples, which only happens for small m. Ask the
  // youngest older row that has some for the same fractions of the stream,
  // q (eps/8) t for t = 2^(r-1) m. The oldest live row expects about m
  // samples by now, so running out of sources means m is degenerate.
  ReplacementQueue<T> fallback_replacement(unsigned r) const {
    const uint64_t t = schedule::birth(r, config_.m);
    const Row* source = nullptr;
    for (const Row& row : rows_) {
      if (row.r < r && !row.gk.empty()) {
        source = &row;
      }
    }
    if (source == nullptr) {
      throw std::logic_error("OnlineSummary: no older row holds samples");
    }
    const double per_item = static_cast<double>(t) / static_cast<double>(divisor(source->r));
    std::vector<T> values;
    const uint64_t k = schedule::replacement_quantiles(config_.epsilon);
    for (uint64_t q = 1; q <= k; ++q) {
      const double rho = static_cast<double>(q) * config_.epsilon / 8.0 * per_item;
      values.push_back(source->gk.query(std::max<uint64_t>(1, static_cast<uint64_t>(std::llround(rho)))));
    }
    return make_replacement_queue(std::move(values), config_.epsilon, config_.m, r);
  }

  RowStats row_stats(const Row& row) const {
    RowStats rs;
    rs.r = row.r;
    rs.active = row.r == active_;
    rs.samples = row.samples;
    rs.gk_insertions = row.gk_insertions;
    rs.tuples = row.gk.tuple_count();
    if (row.replacement) {
      rs.replacement_consumed = row.replacement->consumed();
      rs.replacement_total = row.replacement->total();
    }
    return rs;
  }

  bool capped(const Row& row) const {
    if (row.r == 0 && config_.row0 == Row0Sampling::kUnsampled) {
      return false;
    }
    return row.gk_insertions >= 2 * config_.m;
  }

  void offer(Row& row, const T& value, bool replacement = false) {
    BernoulliSampler& coin = replacement ? row.replacement_sampler : row.sampler;
    const bool sampled = coin.offer();
    bool inserted = false;
    if (sampled) {
      ++row.samples;
      if (!capped(row)) {
        row.gk.insert(value);
        ++row.gk_insertions;
        ++step_ops_;
        inserted = true;
      }
    }
    if (trace_) {
      trace_->on_offer(row.r, value, sampled, inserted);
    }
  }

  uint64_t divisor(unsigned r) const { return schedule::query_divisor(r, config_.row0); }

  const Row& find_row(unsigned r) const {
    for (const Row& row : rows_) {
      if (row.r == r) {
        return row;
      }
    }
    throw std::logic_error("OnlineSummary: row " + std::to_string(r) + " is not live");
  }

  const Row& active() const {
    if (t_ == 0) {
      throw std::logic_error("OnlineSummary: query before the first insert");
    }
    return find_row(active_);
  }

  OnlineConfig config_;
  Compare compare_;
  uint64_t t_ = 0;
  unsigned active_ = 0;
  std::vector<Row> rows_;
  std::vector<RowStats> retired_;
  uint64_t step_ops_ = 0;
  uint64_t max_step_ops_ = 0;
  OnlineTrace<T>* trace_ = nullptr;
};

}  // namespace qs
