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

#ifndef WFEXT_BUCKET_STATE_HPP
#define WFEXT_BUCKET_STATE_HPP

#include <cassert>
#include <cstdint>
#include <cstring>

#include "wfext/common.hpp"
#include "wfext/op_record.hpp"

namespace wfext {

/// Result of the last update a thread executed on a bucket lineage, packed
/// into one word: seqnum in the top 56 bits, outcome in the low byte.
/// Seqnum 0 means "no operation ever applied".
struct result_entry {
  std::uint64_t raw;

  [[nodiscard]] std::uint64_t seqnum() const noexcept { return raw >> 8; }
  [[nodiscard]] op_status outcome() const noexcept {
    return static_cast<op_status>(raw & 0xff);
  }
  static result_entry make(std::uint64_t seq, op_status st) noexcept {
    assert(seq < (1ULL << 56));
    return result_entry{(seq << 8) | static_cast<std::uint64_t>(st)};
  }
};

struct item {
  key_type key;
  value_type value;
};

/// Outcome of running one operation against a private state copy.
struct exec_result {
  bool applied = false;    // false: the op hit the full-bucket rule and stays pending
  op_status status = op_status::none;
};

/// Immutable-once-published bucket contents: a fixed-capacity item array,
/// the applied bit vector, and one result entry per thread. Laid out as a
/// single self-describing block so copies are a memcpy and allocations can
/// be served from fixed-size block heaps:
///
///   [header | applied words | result entries (n) | items (capacity)]
class bucket_state {
 public:
  std::uint16_t threads;    // n
  std::uint16_t capacity;   // b
  std::uint16_t word_count; // ceil(n / 64)
  std::uint16_t count;      // live items
  std::uint8_t frozen;
  std::uint8_t pad_[7];

  static std::size_t block_size(unsigned threads, unsigned capacity) noexcept {
    const unsigned words = (threads + 63) / 64;
    return sizeof(bucket_state) + words * sizeof(std::uint64_t) +
           threads * sizeof(result_entry) + capacity * sizeof(item);
  }

  /// Formats a raw block as an empty state.
  static bucket_state* init(void* block, unsigned threads, unsigned capacity) noexcept {
    auto* s = static_cast<bucket_state*>(block);
    s->threads = static_cast<std::uint16_t>(threads);
    s->capacity = static_cast<std::uint16_t>(capacity);
    s->word_count = static_cast<std::uint16_t>((threads + 63) / 64);
    s->count = 0;
    s->frozen = 0;
    std::memset(s->applied_words(), 0, s->word_count * sizeof(std::uint64_t));
    std::memset(s->results(), 0, s->threads * sizeof(result_entry));
    return s;
  }

  /// Copies `src` wholesale into a raw block.
  static bucket_state* clone(void* block, const bucket_state& src) noexcept {
    std::memcpy(block, &src, block_size(src.threads, src.capacity));
    return static_cast<bucket_state*>(block);
  }

  [[nodiscard]] std::uint64_t* applied_words() noexcept {
    return reinterpret_cast<std::uint64_t*>(this + 1);
  }
  [[nodiscard]] const std::uint64_t* applied_words() const noexcept {
    return reinterpret_cast<const std::uint64_t*>(this + 1);
  }
  [[nodiscard]] result_entry* results() noexcept {
    return reinterpret_cast<result_entry*>(applied_words() + word_count);
  }
  [[nodiscard]] const result_entry* results() const noexcept {
    return reinterpret_cast<const result_entry*>(applied_words() + word_count);
  }
  [[nodiscard]] item* items() noexcept {
    return reinterpret_cast<item*>(results() + threads);
  }
  [[nodiscard]] const item* items() const noexcept {
    return reinterpret_cast<const item*>(results() + threads);
  }

  [[nodiscard]] bool full() const noexcept { return count == capacity; }

  [[nodiscard]] result_entry result_of(unsigned tid) const noexcept {
    return results()[tid];
  }

  /// Linear scan; capacity is small by design.
  [[nodiscard]] int find(key_type key) const noexcept {
    const item* it = items();
    for (unsigned i = 0; i < count; ++i) {
      if (it[i].key == key) return static_cast<int>(i);
    }
    return -1;
  }

  /// Runs one operation sequentially on this private copy and records its
  /// result entry when it applies. No update, not even an erase, touches a
  /// copy that is already at capacity: full states must reach publication
  /// unchanged so splits cannot lose updates. `owner_depth` is the depth of
  /// the bucket this copy belongs to (used by freeze staleness checks).
  exec_result run(unsigned tid, const op_record& op, unsigned owner_depth) noexcept {
    switch (op.kind) {
      case op_kind::insert: {
        const int at = find(op.key);
        if (at >= 0) {
          items()[at].value = op.value;
          return record(tid, op.seqnum, op_status::updated);
        }
        if (full()) return {};
        items()[count].key = op.key;
        items()[count].value = op.value;
        ++count;
        return record(tid, op.seqnum, op_status::inserted);
      }
      case op_kind::erase: {
        if (full()) return {};
        const int at = find(op.key);
        if (at < 0) return record(tid, op.seqnum, op_status::absent);
        items()[at] = items()[count - 1];  // swap-with-last compaction
        --count;
        return record(tid, op.seqnum, op_status::removed);
      }
      case op_kind::freeze: {
        if (full()) return {};  // full participants make the merge fail
        const auto payload = restructure_payload::unpack(op.value);
        if (payload.target_depth != owner_depth) {
          // The intended participant was restructured away; report without
          // mutating so the merge owner can abort.
          return record(tid, op.seqnum, op_status::stale_target);
        }
        if (frozen) return record(tid, op.seqnum, op_status::already_frozen);
        frozen = 1;
        return record(tid, op.seqnum, op_status::frozen_done);
      }
      case op_kind::unfreeze:
      case op_kind::merge:
        assert(false && "restructure records never run on a bucket copy");
        return {};
    }
    return {};
  }

 private:
  exec_result record(unsigned tid, std::uint64_t seq, op_status st) noexcept {
    results()[tid] = result_entry::make(seq, st);
    return {true, st};
  }
};

static_assert(sizeof(bucket_state) == 16);

}  // namespace wfext

#endif  // WFEXT_BUCKET_STATE_HPP
