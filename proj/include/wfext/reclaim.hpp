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

#ifndef WFEXT_RECLAIM_HPP
#define WFEXT_RECLAIM_HPP

#include <atomic>
#include <cassert>
#include <cstdint>
#include <cstring>
#include <deque>
#include <new>
#include <vector>

#include "wfext/bucket.hpp"
#include "wfext/common.hpp"

namespace wfext {

enum class object_kind : std::uint8_t {
  state_block,   // bucket_state; reclaimed into the local block heap
  bucket_block,  // bucket; its final state cascades into the heap
  dir_block,     // directory_state
  raw_block,     // op records and other odds
};

/// Epoch-based reclamation with per-thread activity counters and
/// thread-local heaps of bucket-state-sized blocks.
///
/// Counter protocol: bit 0 set means the thread declared itself quiescent;
/// an operation start bumps the counter to a fresh even value. A retired
/// batch may be reclaimed once every thread either moved its counter past
/// the value recorded at retirement or is quiescent right now.
class reclaimer {
 public:
  struct handle {
    void* ptr;
    object_kind kind;
  };

  reclaimer(unsigned threads, reclaim_mode mode, unsigned batch_size,
            unsigned heap_batches, std::size_t state_bytes, bool poison = false)
      : threads_(threads),
        mode_(mode),
        batch_size_(batch_size),
        heap_capacity_(static_cast<std::size_t>(heap_batches) * batch_size),
        state_bytes_(state_bytes),
        poison_(poison),
        slots_(threads) {
    for (auto& s : slots_) {
      s.current.reserve(batch_size_);
      s.heap.reserve(heap_capacity_);
    }
  }

  reclaimer(const reclaimer&) = delete;
  reclaimer& operator=(const reclaimer&) = delete;

  ~reclaimer() {
    for (auto& s : slots_) {
      for (auto& b : s.sealed) release_all(b.handles);
      release_all(s.current);
      for (void* p : s.heap) ::operator delete(p);
    }
  }

  /// Marks the start of a table operation by the owning thread. Anything
  /// observed afterwards was not reclaimed before this point.
  void op_begin(unsigned tid) noexcept {
    auto& c = slots_[tid].counter;
    const std::uint64_t cur = c.load(std::memory_order_relaxed);
    c.store((cur | 1) + 1, std::memory_order_seq_cst);  // next even value
  }

  /// Declares the thread idle so it does not hold back reclamation.
  void set_quiescent(unsigned tid) noexcept {
    auto& c = slots_[tid].counter;
    c.store(c.load(std::memory_order_relaxed) | 1, std::memory_order_seq_cst);
  }

  [[nodiscard]] bool is_quiescent(unsigned tid) const noexcept {
    return slots_[tid].counter.load(std::memory_order_relaxed) & 1;
  }

  /// Pops a bucket-state-sized block from the local heap, falling back to
  /// the general allocator. The block contents are unspecified.
  void* alloc_state(unsigned tid) {
    auto& heap = slots_[tid].heap;
    if (!heap.empty()) {
      void* p = heap.back();
      heap.pop_back();
      return p;
    }
    return ::operator new(state_bytes_);
  }

  /// Returns a never-published private copy straight to the heap.
  void free_state(unsigned tid, void* p) noexcept { heap_put(tid, p); }

  /// Quarantines an object that was just unlinked by a successful CAS.
  /// Filling a batch seals it with the current counter vector and triggers
  /// a scan of the older batches.
  void retire(unsigned tid, void* p, object_kind kind) {
    if (mode_ == reclaim_mode::leak) return;
    auto& s = slots_[tid];
    s.current.push_back({p, kind});
    s.pending.fetch_add(1, std::memory_order_relaxed);
    if (s.current.size() >= batch_size_) {
      seal_batch(s);
      scan_and_reclaim(tid);
    }
  }

  /// Reclaims every sealed batch older than the newest whose snapshot every
  /// thread has moved past. Returns the number of handles reclaimed.
  std::size_t scan_and_reclaim(unsigned tid) {
    auto& s = slots_[tid];
    std::size_t reclaimed = 0;
    while (s.sealed.size() > 1) {
      if (!safe_to_reclaim(s.sealed.front().snapshot)) break;
      reclaimed += reclaim_batch(tid, s.sealed.front().handles);
      s.sealed.pop_front();
    }
    return reclaimed;
  }

  /// Drains everything including the newest batch; used by tests and on
  /// shutdown paths where the caller knows all threads are quiet.
  std::size_t drain(unsigned tid) {
    auto& s = slots_[tid];
    if (!s.current.empty()) seal_batch(s);
    std::size_t reclaimed = 0;
    while (!s.sealed.empty()) {
      if (!safe_to_reclaim(s.sealed.front().snapshot)) break;
      reclaimed += reclaim_batch(tid, s.sealed.front().handles);
      s.sealed.pop_front();
    }
    return reclaimed;
  }

  /// Retired-but-unreclaimed handles across all threads (racy but monotone
  /// enough for plateau checks).
  [[nodiscard]] std::size_t retired_pending() const noexcept {
    std::size_t total = 0;
    for (const auto& s : slots_) total += s.pending.load(std::memory_order_relaxed);
    return total;
  }

  [[nodiscard]] std::size_t heap_size(unsigned tid) const noexcept {
    return slots_[tid].heap.size();
  }
  [[nodiscard]] std::uint64_t reclaimed_total() const noexcept {
    std::uint64_t total = 0;
    for (const auto& s : slots_) total += s.reclaimed.load(std::memory_order_relaxed);
    return total;
  }
  [[nodiscard]] std::uint64_t counter_of(unsigned tid) const noexcept {
    return slots_[tid].counter.load(std::memory_order_relaxed);
  }
  [[nodiscard]] bool poisoning() const noexcept { return poison_; }
  [[nodiscard]] std::size_t state_bytes() const noexcept { return state_bytes_; }

  static constexpr std::uint8_t kPoisonByte = 0xDB;

 private:
  struct batch {
    std::vector<handle> handles;
    std::vector<std::uint64_t> snapshot;  // counter per thread at seal time
  };

  struct alignas(64) thread_slot {
    // Starts quiescent so a registered-but-idle thread never blocks scans.
    std::atomic<std::uint64_t> counter{1};
    std::atomic<std::size_t> pending{0};
    std::atomic<std::uint64_t> reclaimed{0};
    std::vector<handle> current;
    std::deque<batch> sealed;
    std::vector<void*> heap;
  };

  void seal_batch(thread_slot& s) {
    batch b;
    b.handles = std::move(s.current);
    s.current.clear();
    s.current.reserve(batch_size_);
    b.snapshot.resize(threads_);
    for (unsigned j = 0; j < threads_; ++j) {
      b.snapshot[j] = slots_[j].counter.load(std::memory_order_seq_cst);
    }
    s.sealed.push_back(std::move(b));
  }

  [[nodiscard]] bool safe_to_reclaim(const std::vector<std::uint64_t>& snapshot) const {
    for (unsigned j = 0; j < threads_; ++j) {
      const std::uint64_t cur = slots_[j].counter.load(std::memory_order_seq_cst);
      // A thread still inside the operation it was running at seal time has
      // an unchanged, non-quiescent counter and may hold old snapshots.
      if (cur == snapshot[j] && !(cur & 1)) return false;
    }
    return true;
  }

  std::size_t reclaim_batch(unsigned tid, std::vector<handle>& handles) {
    auto& s = slots_[tid];
    const std::size_t n = handles.size();
    for (const handle& h : handles) dispose(tid, h);
    handles.clear();
    s.pending.fetch_sub(n, std::memory_order_relaxed);
    s.reclaimed.fetch_add(n, std::memory_order_relaxed);
    return n;
  }

  void dispose(unsigned tid, const handle& h) {
    switch (h.kind) {
      case object_kind::state_block:
        heap_put(tid, h.ptr);
        break;
      case object_kind::bucket_block: {
        // No thread can reach this bucket anymore, so its last state pointer
        // is stable and the state block is garbage too.
        auto* b = static_cast<bucket*>(h.ptr);
        heap_put(tid, b->state.load(std::memory_order_relaxed));
        ::operator delete(h.ptr);
        break;
      }
      case object_kind::dir_block:
      case object_kind::raw_block:
        if (poison_) poison_block(h.ptr, sizeof(std::uint64_t) * 2);
        ::operator delete(h.ptr);
        break;
    }
  }

  void heap_put(unsigned tid, void* p) noexcept {
    if (poison_) poison_block(p, state_bytes_);
    auto& heap = slots_[tid].heap;
    if (heap.size() < heap_capacity_) {
      heap.push_back(p);
    } else {
      ::operator delete(p);
    }
  }

  static void poison_block(void* p, std::size_t bytes) noexcept {
    std::memset(p, kPoisonByte, bytes);
  }

  unsigned threads_;
  reclaim_mode mode_;
  std::size_t batch_size_;
  std::size_t heap_capacity_;
  std::size_t state_bytes_;
  bool poison_;
  std::vector<thread_slot> slots_;

  void release_all(std::vector<handle>& handles) {
    for (const handle& h : handles) {
      if (h.kind == object_kind::bucket_block) {
        ::operator delete(static_cast<bucket*>(h.ptr)->state.load(std::memory_order_relaxed));
      }
      ::operator delete(h.ptr);
    }
    handles.clear();
  }
};

}  // namespace wfext

#endif  // WFEXT_RECLAIM_HPP
