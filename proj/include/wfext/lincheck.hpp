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

#ifndef WFEXT_LINCHECK_HPP
#define WFEXT_LINCHECK_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wfext/common.hpp"

namespace wfext::lincheck {

struct config {
  unsigned threads = 3;         // kept small: the check is exhaustive
  unsigned ops_per_thread = 4;  // threads * ops_per_thread <= 12 recommended
  std::uint64_t key_space = 4;
  unsigned bucket_capacity = 2;  // small buckets force splits mid-history
  unsigned initial_depth = 1;
  std::uint64_t seed = 1;
  unsigned lookup_pct = 25;
  unsigned insert_pct = 45;
  unsigned delete_pct = 30;
  bool jitter = true;  // seeded random pauses at the synchronization points
};

/// One completed operation with its real-time window. `invoked < responded`;
/// windows come from a shared event counter, so overlap is exact.
struct event {
  unsigned thread = 0;
  op_kind kind = op_kind::insert;  // insert/erase; lookups use is_lookup
  bool is_lookup = false;
  key_type key = 0;
  value_type value = 0;
  std::uint64_t invoked = 0;
  std::uint64_t responded = 0;
  op_status status = op_status::none;          // updates
  std::optional<value_type> found;             // lookups
};

using history = std::vector<event>;

/// Runs a small concurrent workload against a fresh table and records the
/// completed-operation history.
history record_history(const config& cfg);

enum class verdict : std::uint8_t {
  linearizable,
  not_linearizable,
  budget_exhausted,  // the history is too large for the search budget
};

/// Exhaustive linearizability check of a recorded history against the
/// sequential dictionary (insert updates existing keys), exploring at most
/// `budget` search nodes. When a witness vector is supplied it receives a
/// valid linearization order (indices into the history) on success.
verdict check_within(const history& h, std::uint64_t budget,
                     std::vector<std::size_t>* witness = nullptr);

/// check_within with a budget far beyond any desk-scale history.
bool check(const history& h, std::vector<std::size_t>* witness = nullptr);

std::string describe(const history& h);

struct trial_summary {
  unsigned trials = 0;
  unsigned failures = 0;
  unsigned timeouts = 0;  // histories beyond the search budget
  std::uint64_t first_failing_seed = 0;
  history first_failure;
};

/// Repeats record+check over consecutive seeds starting at cfg.seed.
trial_summary run_trials(const config& cfg, unsigned trials);

}  // namespace wfext::lincheck

#endif  // WFEXT_LINCHECK_HPP
