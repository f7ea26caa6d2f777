/*
 * Copyright 2026 The wfext Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef WFEXT_BENCH_HPP
#define WFEXT_BENCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wfext/common.hpp"

namespace wfext::bench {

/// Seedable uniform 64-bit generator; every worker gets an independent
/// stream derived from the run seed and its thread index.
class splitmix64 {
 public:
  explicit splitmix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }
  /// Uniform value in [0, bound).
  std::uint64_t next_below(std::uint64_t bound) noexcept { return next() % bound; }

  static splitmix64 stream(std::uint64_t seed, unsigned tid) noexcept {
    return splitmix64(mix64(seed ^ (0x5851f42d4c957f2dULL * (tid + 1))));
  }

 private:
  std::uint64_t state_;
};

struct workload_config {
  std::string algo = "wfext";  // wfext | lock
  unsigned threads = 4;
  double duration_seconds = 5.0;
  std::uint64_t key_space = 1024;
  unsigned lookup_pct = 90;
  unsigned insert_pct = 5;
  unsigned delete_pct = 5;
  double prefill = 0.5;
  unsigned bucket_capacity = 8;
  unsigned initial_depth = 1;
  std::uint64_t seed = 1;
  reclaim_mode reclaim = reclaim_mode::epoch;
  hash_kind hash = hash_kind::mix64;
  bool poison = false;

  /// Returns an empty string when usable, otherwise the problem.
  [[nodiscard]] std::string problem() const;
};

struct op_draw {
  enum class kind : std::uint8_t { lookup, insert, erase } what;
  key_type key;
  value_type value;
};

/// The deterministic operation stream a worker executes: identical seed and
/// config always produce identical streams.
op_draw draw_op(splitmix64& prng, const workload_config& cfg);

struct throughput_report {
  std::uint64_t ops_total = 0;
  double ops_per_second = 0;
  double elapsed_seconds = 0;
  std::uint64_t lookups = 0;
  std::uint64_t inserts = 0;
  std::uint64_t deletes = 0;
  std::uint64_t resize_publishes = 0;
  std::uint64_t bucket_splits = 0;
  unsigned final_depth = 0;
  std::size_t memory_high_water_kb = 0;
  std::uint64_t retired_pending_peak = 0;
  std::uint64_t poison_violations = 0;
  bool audit_ok = true;
};

/// Prefills, runs the mixed workload for the configured duration and audits
/// the table afterwards. Prefill time is not measured.
throughput_report run_throughput(const workload_config& cfg);

struct resize_report {
  double seconds_to_final = 0;
  unsigned final_depth = 0;
  std::uint64_t bucket_splits = 0;
  std::uint64_t inserted = 0;
  bool depth_stable = false;
  bool audit_ok = true;
};

/// Starts from two buckets and inserts the whole key space (50% interleaved
/// lookups), timing how long the table takes to reach its final shape.
/// Requires initial_depth == 1.
resize_report run_resize_benchmark(const workload_config& cfg);

/// Peak resident set size of this process, in KiB.
std::size_t process_peak_rss_kb();

std::string csv_header();
std::string csv_row(const workload_config& cfg, const std::string& mode, unsigned repeat_index,
                    const throughput_report& rep);

}  // namespace wfext::bench

#endif  // WFEXT_BENCH_HPP
