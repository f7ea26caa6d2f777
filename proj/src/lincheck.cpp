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

#include "wfext/lincheck.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "wfext/bench.hpp"
#include "wfext/table.hpp"

namespace wfext::lincheck {

namespace {

/// Sequential dictionary used as the specification.
struct model {
  std::map<key_type, value_type> dict;

  op_status apply_insert(key_type k, value_type v) {
    const auto [it, fresh] = dict.insert_or_assign(k, v);
    (void)it;
    return fresh ? op_status::inserted : op_status::updated;
  }
  op_status apply_erase(key_type k) {
    return dict.erase(k) != 0 ? op_status::removed : op_status::absent;
  }
  std::optional<value_type> apply_lookup(key_type k) const {
    const auto it = dict.find(k);
    if (it == dict.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] std::uint64_t digest() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (const auto& [k, v] : dict) h = mix64(h ^ k) ^ mix64(v);
    return h;
  }
};

bool matches(const event& e, model& m) {
  if (e.is_lookup) return m.apply_lookup(e.key) == e.found;
  if (e.kind == op_kind::insert) return m.apply_insert(e.key, e.value) == e.status;
  return m.apply_erase(e.key) == e.status;
}

struct search_state {
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  std::uint64_t nodes_left;
  bool exhausted = false;
};

bool search(const history& h, std::vector<std::size_t>& order, std::vector<bool>& taken,
            model& m, search_state& st) {
  if (order.size() == h.size()) return true;
  if (st.nodes_left == 0) {
    st.exhausted = true;
    return false;
  }
  --st.nodes_left;

  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (taken[i]) mask |= (1ULL << i);
  }
  if (!st.seen.insert({mask, m.digest()}).second) return false;

  // An operation may linearize next only if no un-linearized operation
  // responded before it was invoked.
  std::uint64_t min_response = ~0ULL;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!taken[i]) min_response = std::min(min_response, h[i].responded);
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (taken[i] || h[i].invoked > min_response) continue;
    model saved = m;
    if (!matches(h[i], m)) {
      m = std::move(saved);
      continue;
    }
    taken[i] = true;
    order.push_back(i);
    if (search(h, order, taken, m, st)) return true;
    order.pop_back();
    taken[i] = false;
    m = std::move(saved);
  }
  return false;
}

}  // namespace

verdict check_within(const history& h, std::uint64_t budget,
                     std::vector<std::size_t>* witness) {
  if (h.size() > 63) return verdict::budget_exhausted;  // mask width
  std::vector<std::size_t> order;
  std::vector<bool> taken(h.size(), false);
  model m;
  search_state st;
  st.nodes_left = budget;
  const bool ok = search(h, order, taken, m, st);
  if (ok) {
    if (witness != nullptr) *witness = order;
    return verdict::linearizable;
  }
  return st.exhausted ? verdict::budget_exhausted : verdict::not_linearizable;
}

bool check(const history& h, std::vector<std::size_t>* witness) {
  return check_within(h, 1ull << 32, witness) == verdict::linearizable;
}

history record_history(const config& cfg) {
  table_config tc;
  tc.threads = cfg.threads;
  tc.bucket_capacity = cfg.bucket_capacity;
  tc.initial_depth = cfg.initial_depth;
  tc.hash = hash_kind::mix64;
  tc.reclaim = reclaim_mode::epoch;
  hash_table table(tc);

  if (cfg.jitter) {
    // Seeded pauses at the algorithm's synchronization points shake out
    // interleavings that plain scheduling rarely produces.
    auto pause = [seed = cfg.seed](unsigned tid) {
      thread_local bench::splitmix64 rng = bench::splitmix64::stream(seed, tid + 101);
      if (rng.next_below(4) == 0) {
        const auto until = std::chrono::steady_clock::now() +
                           std::chrono::microseconds(rng.next_below(150));
        while (std::chrono::steady_clock::now() < until) std::this_thread::yield();
      }
    };
    failpoints fp;
    fp.after_announce_flip = pause;
    fp.before_bucket_publish = pause;
    fp.before_directory_publish = pause;
    table.set_failpoints(std::move(fp));
  }

  std::atomic<std::uint64_t> clock{0};
  std::vector<history> per_thread(cfg.threads);
  std::atomic<unsigned> ready{0};
  std::atomic<bool> go{false};

  std::vector<std::thread> workers;
  workers.reserve(cfg.threads);
  for (unsigned t = 0; t < cfg.threads; ++t) {
    workers.emplace_back([&, t] {
      auto ctx = table.register_thread();
      bench::splitmix64 prng = bench::splitmix64::stream(cfg.seed, t);
      ready.fetch_add(1);
      while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
      for (unsigned i = 0; i < cfg.ops_per_thread; ++i) {
        event e;
        e.thread = t;
        e.key = prng.next_below(cfg.key_space);
        const unsigned dice = static_cast<unsigned>(prng.next_below(100));
        e.invoked = clock.fetch_add(1, std::memory_order_seq_cst);
        if (dice < cfg.lookup_pct) {
          e.is_lookup = true;
          e.found = table.lookup(*ctx, e.key);
        } else if (dice < cfg.lookup_pct + cfg.insert_pct) {
          e.kind = op_kind::insert;
          e.value = mix64(cfg.seed ^ (t * 977u) ^ i);
          e.status = table.insert(*ctx, e.key, e.value);
        } else {
          e.kind = op_kind::erase;
          e.status = table.erase(*ctx, e.key);
        }
        e.responded = clock.fetch_add(1, std::memory_order_seq_cst);
        per_thread[t].push_back(e);
      }
      table.set_quiescent(*ctx);
    });
  }

  while (ready.load() != cfg.threads) std::this_thread::yield();
  go.store(true, std::memory_order_release);
  for (auto& w : workers) w.join();

  history h;
  for (auto& ph : per_thread) {
    h.insert(h.end(), ph.begin(), ph.end());
  }
  return h;
}

std::string describe(const history& h) {
  std::ostringstream os;
  for (const auto& e : h) {
    os << "T" << e.thread << " [" << e.invoked << "," << e.responded << "] ";
    if (e.is_lookup) {
      os << "lookup(" << e.key << ") -> "
         << (e.found ? std::to_string(*e.found) : std::string("absent"));
    } else if (e.kind == op_kind::insert) {
      os << "insert(" << e.key << "," << e.value << ") -> " << to_string(e.status);
    } else {
      os << "erase(" << e.key << ") -> " << to_string(e.status);
    }
    os << '\n';
  }
  return os.str();
}

trial_summary run_trials(const config& cfg, unsigned trials) {
  trial_summary sum;
  sum.trials = trials;
  for (unsigned i = 0; i < trials; ++i) {
    config c = cfg;
    c.seed = cfg.seed + i;
    history h = record_history(c);
    switch (check_within(h, 1ull << 32)) {
      case verdict::linearizable:
        break;
      case verdict::not_linearizable:
        if (sum.failures == 0) {
          sum.first_failing_seed = c.seed;
          sum.first_failure = h;
        }
        ++sum.failures;
        break;
      case verdict::budget_exhausted:
        ++sum.timeouts;
        break;
    }
  }
  return sum;
}

}  // namespace wfext::lincheck
