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

#include "wfext/bench.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "wfext/baseline.hpp"
#include "wfext/table.hpp"

namespace wfext::bench {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_between(clock_type::time_point a, clock_type::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

unsigned lock_table_depth(const workload_config& cfg) {
  // Fixed bucket count sized to the workload key range.
  const double buckets = std::max(1.0, static_cast<double>(cfg.key_space) /
                                           static_cast<double>(cfg.bucket_capacity));
  const unsigned depth = static_cast<unsigned>(std::ceil(std::log2(buckets)));
  return std::clamp(depth, 1u, 24u);
}

table_config to_table_config(const workload_config& cfg) {
  table_config tc;
  tc.threads = cfg.threads;
  tc.bucket_capacity = cfg.bucket_capacity;
  tc.initial_depth = cfg.initial_depth;
  tc.hash = cfg.hash;
  tc.reclaim = cfg.reclaim;
  tc.poison = cfg.poison;
  return tc;
}

value_type value_for(key_type key, std::uint64_t salt) { return mix64(key ^ salt); }

}  // namespace

std::string workload_config::problem() const {
  if (algo != "wfext" && algo != "lock") return "algo must be wfext or lock";
  if (threads == 0) return "threads must be positive";
  if (lookup_pct + insert_pct + delete_pct != 100) return "mix percentages must sum to 100";
  if (prefill < 0.0 || prefill > 1.0) return "prefill must be within [0,1]";
  if (key_space == 0) return "key space must be positive";
  if (bucket_capacity == 0) return "bucket capacity must be positive";
  if (initial_depth == 0) return "initial depth must be positive";
  if (duration_seconds < 0) return "duration must be non-negative";
  return "";
}

op_draw draw_op(splitmix64& prng, const workload_config& cfg) {
  const unsigned dice = static_cast<unsigned>(prng.next_below(100));
  const key_type key = prng.next_below(cfg.key_space);
  if (dice < cfg.lookup_pct) return {op_draw::kind::lookup, key, 0};
  if (dice < cfg.lookup_pct + cfg.insert_pct) {
    return {op_draw::kind::insert, key, value_for(key, prng.next())};
  }
  return {op_draw::kind::erase, key, 0};
}

std::size_t process_peak_rss_kb() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream is(line.substr(6));
      std::size_t kb = 0;
      is >> kb;
      return kb;
    }
  }
  // Some containers strip VmHWM from /proc; ru_maxrss is in KiB on Linux.
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) == 0) return static_cast<std::size_t>(usage.ru_maxrss);
  return 0;
}

namespace {

struct worker_counts {
  std::uint64_t lookups = 0;
  std::uint64_t inserts = 0;
  std::uint64_t deletes = 0;
  [[nodiscard]] std::uint64_t total() const { return lookups + inserts + deletes; }
};

template <class LookupFn, class InsertFn, class EraseFn>
void run_mixed_loop(const workload_config& cfg, unsigned tid, const std::atomic<bool>& stop,
                    worker_counts& counts, LookupFn&& do_lookup, InsertFn&& do_insert,
                    EraseFn&& do_erase) {
  splitmix64 prng = splitmix64::stream(cfg.seed, tid);
  while (!stop.load(std::memory_order_relaxed)) {
    const op_draw d = draw_op(prng, cfg);
    switch (d.what) {
      case op_draw::kind::lookup:
        do_lookup(d.key);
        ++counts.lookups;
        break;
      case op_draw::kind::insert:
        do_insert(d.key, d.value);
        ++counts.inserts;
        break;
      case op_draw::kind::erase:
        do_erase(d.key);
        ++counts.deletes;
        break;
    }
  }
}

throughput_report run_throughput_wfext(const workload_config& cfg) {
  hash_table table(to_table_config(cfg));
  throughput_report rep;

  std::vector<worker_counts> counts(cfg.threads);
  std::atomic<bool> stop{false};
  std::atomic<unsigned> ready{0};
  std::atomic<bool> go{false};
  std::atomic<std::uint64_t> retired_peak{0};

  std::vector<std::thread> workers;
  workers.reserve(cfg.threads);
  for (unsigned t = 0; t < cfg.threads; ++t) {
    workers.emplace_back([&, t] {
      auto ctx = table.register_thread();
      // Worker 0 prefills before the clock starts.
      if (t == 0 && cfg.prefill > 0) {
        splitmix64 prefill_rng = splitmix64::stream(cfg.seed, 0x7e7eu);
        const auto threshold =
            static_cast<std::uint64_t>(cfg.prefill * 18446744073709551615.0);
        for (std::uint64_t k = 0; k < cfg.key_space; ++k) {
          if (prefill_rng.next() <= threshold) {
            table.insert(*ctx, k, value_for(k, 0));
          }
        }
      }
      ready.fetch_add(1);
      while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
      run_mixed_loop(
          cfg, t, stop, counts[t], [&](key_type k) { table.lookup(*ctx, k); },
          [&](key_type k, value_type v) { table.insert(*ctx, k, v); },
          [&](key_type k) { table.erase(*ctx, k); });
      table.set_quiescent(*ctx);
    });
  }

  while (ready.load() != cfg.threads) std::this_thread::yield();
  const auto start = clock_type::now();
  go.store(true, std::memory_order_release);
  const auto deadline =
      start + std::chrono::duration_cast<clock_type::duration>(
                  std::chrono::duration<double>(cfg.duration_seconds));
  while (clock_type::now() < deadline) {
    const auto pending = static_cast<std::uint64_t>(table.memory().retired_pending());
    if (pending > retired_peak.load(std::memory_order_relaxed)) {
      retired_peak.store(pending, std::memory_order_relaxed);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  stop.store(true, std::memory_order_relaxed);
  for (auto& w : workers) w.join();
  const auto end = clock_type::now();

  rep.elapsed_seconds = seconds_between(start, end);
  for (const auto& c : counts) {
    rep.lookups += c.lookups;
    rep.inserts += c.inserts;
    rep.deletes += c.deletes;
    rep.ops_total += c.total();
  }
  rep.ops_per_second = rep.elapsed_seconds > 0 ? rep.ops_total / rep.elapsed_seconds : 0;
  const table_stats st = table.stats();
  rep.resize_publishes = st.directory_publishes;
  rep.bucket_splits = st.bucket_splits;
  rep.final_depth = st.depth;
  rep.poison_violations = st.poison_violations;
  rep.retired_pending_peak = retired_peak.load();
  rep.memory_high_water_kb = process_peak_rss_kb();
  rep.audit_ok = table.validate();
  return rep;
}

throughput_report run_throughput_lock(const workload_config& cfg) {
  locked_table table(lock_table_depth(cfg), cfg.hash);
  throughput_report rep;

  if (cfg.prefill > 0) {
    splitmix64 prefill_rng = splitmix64::stream(cfg.seed, 0x7e7eu);
    const auto threshold = static_cast<std::uint64_t>(cfg.prefill * 18446744073709551615.0);
    for (std::uint64_t k = 0; k < cfg.key_space; ++k) {
      if (prefill_rng.next() <= threshold) table.insert(k, value_for(k, 0));
    }
  }

  std::vector<worker_counts> counts(cfg.threads);
  std::atomic<bool> stop{false};
  std::atomic<unsigned> ready{0};
  std::atomic<bool> go{false};

  std::vector<std::thread> workers;
  workers.reserve(cfg.threads);
  for (unsigned t = 0; t < cfg.threads; ++t) {
    workers.emplace_back([&, t] {
      ready.fetch_add(1);
      while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
      run_mixed_loop(
          cfg, t, stop, counts[t], [&](key_type k) { table.lookup(k); },
          [&](key_type k, value_type v) { table.insert(k, v); },
          [&](key_type k) { table.erase(k); });
    });
  }

  while (ready.load() != cfg.threads) std::this_thread::yield();
  const auto start = clock_type::now();
  go.store(true, std::memory_order_release);
  std::this_thread::sleep_for(std::chrono::duration<double>(cfg.duration_seconds));
  stop.store(true, std::memory_order_relaxed);
  for (auto& w : workers) w.join();
  const auto end = clock_type::now();

  rep.elapsed_seconds = seconds_between(start, end);
  for (const auto& c : counts) {
    rep.lookups += c.lookups;
    rep.inserts += c.inserts;
    rep.deletes += c.deletes;
    rep.ops_total += c.total();
  }
  rep.ops_per_second = rep.elapsed_seconds > 0 ? rep.ops_total / rep.elapsed_seconds : 0;
  rep.final_depth = lock_table_depth(cfg);
  rep.memory_high_water_kb = process_peak_rss_kb();
  return rep;
}

}  // namespace

throughput_report run_throughput(const workload_config& cfg) {
  if (!cfg.problem().empty()) throw std::invalid_argument(cfg.problem());
  return cfg.algo == "lock" ? run_throughput_lock(cfg) : run_throughput_wfext(cfg);
}

resize_report run_resize_benchmark(const workload_config& cfg) {
  if (!cfg.problem().empty()) throw std::invalid_argument(cfg.problem());
  if (cfg.initial_depth != 1) throw std::invalid_argument("resize run requires initial depth 1");

  hash_table table(to_table_config(cfg));
  resize_report rep;

  std::atomic<unsigned> ready{0};
  std::atomic<bool> go{false};
  std::vector<std::thread> workers;
  workers.reserve(cfg.threads);

  for (unsigned t = 0; t < cfg.threads; ++t) {
    workers.emplace_back([&, t] {
      auto ctx = table.register_thread();
      // Each worker owns a slice of the key space and inserts it in a
      // seeded shuffle, with lookups interleaved at 50% probability.
      std::vector<key_type> keys;
      for (std::uint64_t k = t; k < cfg.key_space; k += cfg.threads) keys.push_back(k);
      splitmix64 prng = splitmix64::stream(cfg.seed, t);
      for (std::size_t i = keys.size(); i > 1; --i) {
        std::swap(keys[i - 1], keys[prng.next_below(i)]);
      }
      ready.fetch_add(1);
      while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
      for (const key_type k : keys) {
        table.insert(*ctx, k, value_for(k, 1));
        if (prng.next() & 1) table.lookup(*ctx, prng.next_below(cfg.key_space));
      }
      table.set_quiescent(*ctx);
    });
  }

  while (ready.load() != cfg.threads) std::this_thread::yield();
  const auto start = clock_type::now();
  go.store(true, std::memory_order_release);
  for (auto& w : workers) w.join();
  const auto end = clock_type::now();

  rep.seconds_to_final = seconds_between(start, end);
  rep.inserted = cfg.key_space;
  const unsigned depth_before = table.depth();
  rep.audit_ok = table.validate();
  rep.depth_stable = table.depth() == depth_before;  // no updates left in flight
  rep.final_depth = table.depth();
  rep.bucket_splits = table.stats().bucket_splits;
  return rep;
}

std::string csv_header() {
  return "mode,algo,threads,duration_s,keys,lookup_pct,insert_pct,delete_pct,prefill,"
         "bucket_capacity,initial_depth,seed,reclaim,repeat,ops_total,ops_per_sec,"
         "lookups,inserts,deletes,resize_publishes,bucket_splits,final_depth,"
         "elapsed_s,mem_high_water_kb";
}

std::string csv_row(const workload_config& cfg, const std::string& mode, unsigned repeat_index,
                    const throughput_report& rep) {
  std::ostringstream os;
  os << mode << ',' << cfg.algo << ',' << cfg.threads << ',' << cfg.duration_seconds << ','
     << cfg.key_space << ',' << cfg.lookup_pct << ',' << cfg.insert_pct << ','
     << cfg.delete_pct << ',' << cfg.prefill << ',' << cfg.bucket_capacity << ','
     << cfg.initial_depth << ',' << cfg.seed << ','
     << (cfg.reclaim == reclaim_mode::epoch ? "epoch" : "leak") << ',' << repeat_index << ','
     << rep.ops_total << ',' << rep.ops_per_second << ',' << rep.lookups << ','
     << rep.inserts << ',' << rep.deletes << ',' << rep.resize_publishes << ','
     << rep.bucket_splits << ',' << rep.final_depth << ',' << rep.elapsed_seconds << ','
     << rep.memory_high_water_kb;
  return os.str();
}

}  // namespace wfext::bench
