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

#include <thread>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "wfext/baseline.hpp"
#include "wfext/bench.hpp"
#include "wfext/table.hpp"

using namespace wfext;

TEST_CASE("locked table follows dictionary semantics") {
  locked_table t(4);
  CHECK(t.bucket_count() == 16);
  CHECK(t.insert(1, 10) == op_status::inserted);
  CHECK(t.insert(1, 20) == op_status::updated);
  CHECK(t.lookup(1) == 20);
  CHECK(t.erase(2) == op_status::absent);
  CHECK(t.erase(1) == op_status::removed);
  CHECK_FALSE(t.lookup(1).has_value());
}

TEST_CASE("locked table agrees with the sequential oracle") {
  locked_table t(3);
  testing::seq_dict oracle;
  bench::splitmix64 rng(555);
  for (int i = 0; i < 5000; ++i) {
    const key_type k = rng.next_below(64);
    switch (rng.next_below(3)) {
      case 0: {
        const value_type v = rng.next();
        CHECK(t.insert(k, v) == oracle.insert(k, v));
        break;
      }
      case 1:
        CHECK(t.erase(k) == oracle.erase(k));
        break;
      default:
        CHECK(t.lookup(k) == oracle.lookup(k));
        break;
    }
  }
}

TEST_CASE("locked table and wait-free table agree on a shared trace") {
  locked_table lock_t(4);
  table_config cfg;
  cfg.threads = 1;
  cfg.bucket_capacity = 4;
  hash_table wf_t(cfg);
  auto ctx = wf_t.register_thread();

  bench::splitmix64 rng(808);
  for (int i = 0; i < 5000; ++i) {
    const key_type k = rng.next_below(128);
    switch (rng.next_below(3)) {
      case 0: {
        const value_type v = rng.next();
        CHECK(lock_t.insert(k, v) == wf_t.insert(*ctx, k, v));
        break;
      }
      case 1:
        CHECK(lock_t.erase(k) == wf_t.erase(*ctx, k));
        break;
      default:
        CHECK(lock_t.lookup(k) == wf_t.lookup(*ctx, k));
        break;
    }
  }
}

TEST_CASE("locked table survives parallel writers on disjoint buckets") {
  locked_table t(6, hash_kind::identity);
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      // Identity hash: each worker owns its own top-bit region.
      const key_type base = static_cast<key_type>(w) << 62;
      for (std::uint64_t i = 0; i < 2000; ++i) {
        t.insert(base | i, i);
        t.lookup(base | i);
        if (i % 3 == 0) t.erase(base | i);
      }
    });
  }
  for (auto& th : workers) th.join();
  for (unsigned w = 0; w < 4; ++w) {
    const key_type base = static_cast<key_type>(w) << 62;
    CHECK(t.lookup(base | 1) == 1);  // 1 % 3 != 0: never erased
  }
}
