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

#ifndef WFEXT_TABLE_HPP
#define WFEXT_TABLE_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wfext/bucket.hpp"
#include "wfext/bucket_state.hpp"
#include "wfext/common.hpp"
#include "wfext/directory.hpp"
#include "wfext/op_record.hpp"
#include "wfext/reclaim.hpp"

namespace wfext {

class hash_table;

/// Per-thread operation state. Bound to one registered thread; never share
/// a context across threads.
class thread_context {
 public:
  thread_context() = default;

  [[nodiscard]] unsigned id() const noexcept { return tid_; }

  /// Running instrumentation, mostly exercised by the progress tests.
  struct op_stats {
    std::uint64_t updates = 0;
    std::uint64_t lookups = 0;
    std::uint64_t bucket_cas_attempts = 0;
    std::uint64_t resize_publish_attempts = 0;
    unsigned max_bucket_cas_per_apply = 0;
    unsigned max_publish_per_resize = 0;
    unsigned max_pending_calls_per_resize = 0;
  };
  [[nodiscard]] const op_stats& stats() const noexcept { return stats_; }
  void reset_stats() noexcept { stats_ = {}; }

 private:
  friend class hash_table;
  thread_context(hash_table* owner, unsigned tid) : owner_(owner), tid_(tid) {}

  hash_table* owner_ = nullptr;
  unsigned tid_ = 0;
  std::uint64_t seqnum_ = 0;  // 0 is reserved for "never applied"
  op_stats stats_;
};

/// Scheduling probes for concurrency tests; all optional.
struct failpoints {
  std::function<void(unsigned tid)> after_announce_flip;
  std::function<void(unsigned tid)> before_bucket_publish;
  std::function<void(unsigned tid)> before_directory_publish;
};

struct table_stats {
  std::uint64_t directory_publishes = 0;  // successful ht swaps
  std::uint64_t bucket_splits = 0;
  std::uint64_t merges = 0;
  std::uint64_t poison_violations = 0;
  unsigned depth = 0;
};

enum class merge_status : std::uint8_t {
  merged,
  failed_full,      // a participant was full
  failed_conflict,  // a participant was frozen by another merge
  failed_oversize,  // combined items would not fit one bucket
  failed_stale,     // the prefix is already merged or does not exist
};

/// Wait-free resizable extendible hash table for up to a fixed number of
/// pre-registered threads.
///
/// Updates are combined per bucket: a thread announces its operation, flips
/// its bit in the bucket's toggle vector, then builds a private copy of the
/// bucket state in which it executes every pending announced operation it
/// can see, and publishes the copy with a single CAS. Two attempts always
/// suffice: if both fail, the interleaving winner executed the announced
/// operation on the caller's behalf. Updates that hit a full bucket are
/// completed through the directory path, which splits every full bucket
/// named by an announced operation and executes those operations on the
/// newly created buckets before publishing the new directory.
///
/// Lookups never write shared memory: they read the directory pointer, one
/// bucket pointer and one immutable state snapshot.
class hash_table {
 public:
  explicit hash_table(table_config cfg);
  ~hash_table();

  hash_table(const hash_table&) = delete;
  hash_table& operator=(const hash_table&) = delete;

  /// Hands out the next free thread slot, or nullopt once all `threads`
  /// slots are taken.
  std::optional<thread_context> register_thread();

  std::optional<value_type> lookup(thread_context& ctx, key_type key) noexcept;
  /// Lookup without a registered context. Safe only when no reclamation can
  /// run concurrently (leak mode, or externally quiesced updaters).
  std::optional<value_type> lookup_unguarded(key_type key) const noexcept;

  /// Returns inserted, updated, or depth_overflow.
  op_status insert(thread_context& ctx, key_type key, value_type value);
  /// Returns removed, absent, or depth_overflow.
  op_status erase(thread_context& ctx, key_type key);

  /// Merges every bucket under `parent` (a hash-space prefix) into a single
  /// bucket, shrinking the directory when that leaves it collapsible.
  /// Freezes participants in ascending prefix order first, so of two
  /// conflicting merges at least one completes.
  merge_status request_merge(thread_context& ctx, prefix parent);

  /// Marks the thread idle so it does not hold back memory reclamation.
  void set_quiescent(thread_context& ctx) noexcept;

  [[nodiscard]] unsigned depth() const noexcept;
  [[nodiscard]] const table_config& config() const noexcept { return cfg_; }
  [[nodiscard]] table_stats stats() const noexcept;
  [[nodiscard]] reclaimer& memory() noexcept { return *reclaim_; }

  void set_failpoints(failpoints fp) { fp_ = std::move(fp); }

  /// Checks every directory and bucket invariant on the current snapshot.
  /// Intended for quiescent audits; returns false and a reason on failure.
  bool validate(std::string* why = nullptr) const;

  /// Quiescent audit helper: current buckets and their contents.
  struct bucket_dump {
    prefix pfx;
    bool frozen;
    std::vector<item> items;
  };
  [[nodiscard]] std::vector<bucket_dump> audit_buckets() const;

  /// Sequence number of the last update by `tid` applied on the lineage of
  /// the bucket currently routing `key`; test instrumentation.
  [[nodiscard]] std::uint64_t applied_seqnum(unsigned tid, key_type key) const noexcept;

 private:
  enum class apply_code : std::uint8_t { applied, full, frozen, moved };
  struct apply_result {
    apply_code code;
    op_status status;
  };

  /// One resize transaction: a private directory copy plus the bookkeeping
  /// needed to either publish it or roll everything back.
  struct dir_txn;
  struct release_action;  // caller-private unfreeze list

  const op_record* announce(thread_context& ctx, op_record rec);
  op_status run_update(thread_context& ctx, op_kind kind, key_type key, value_type value);
  void maybe_auto_merge(thread_context& ctx, key_type key);
  apply_result apply_update(thread_context& ctx, bucket* bkt, const op_record& rec);
  bool run_resize(thread_context& ctx, const release_action* release);
  void split_pending(thread_context& ctx, dir_txn& txn, bucket* full_bucket,
                     const op_record* const* records);
  void complete_merge(thread_context& ctx, dir_txn& txn, const op_record& rec, unsigned owner);
  void record_overflow(thread_context& ctx, dir_txn& txn, bucket* dest, unsigned tid,
                       const op_record& rec);

  bucket* make_bucket(unsigned tid, prefix p, const bucket_state* from);
  std::pair<bucket*, bucket*> split_bucket(thread_context& ctx, const bucket* parent);

  [[nodiscard]] bucket_state* state_checked(const bucket* b) const noexcept;
  [[nodiscard]] std::uint64_t route_of(const op_record& rec) const noexcept {
    return rec.route_bits(cfg_.hash);
  }

  table_config cfg_;
  std::unique_ptr<reclaimer> reclaim_;
  bucket_state* quarantine_state_ = nullptr;  // safe target for poisoned reads
  std::atomic<directory_state*> dir_;
  std::vector<std::atomic<const op_record*>> help_;
  std::atomic<unsigned> registered_{0};
  std::atomic<std::uint64_t> directory_publishes_{0};
  std::atomic<std::uint64_t> split_count_{0};
  std::atomic<std::uint64_t> merge_count_{0};
  mutable std::atomic<std::uint64_t> poison_violations_{0};
  failpoints fp_;
};

}  // namespace wfext

#endif  // WFEXT_TABLE_HPP
