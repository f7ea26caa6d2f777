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

#ifndef WFEXT_COMMON_HPP
#define WFEXT_COMMON_HPP

#include <cstdint>
#include <cstddef>
#include <string>

namespace wfext {

/// Keys are 64-bit words routed by their most significant hash bits.
using key_type = std::uint64_t;
/// Values are opaque 64-bit payloads.
using value_type = std::uint64_t;

inline constexpr unsigned kKeyBits = 64;
inline constexpr unsigned kMaxDepthLimit = 48;

enum class hash_kind : std::uint8_t {
  /// splitmix64 finalizer; avalanches all input bits into the top bits.
  mix64,
  /// No mixing. Routing uses the top bits of the key word itself.
  identity,
};

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

inline constexpr std::uint64_t apply_hash(hash_kind h, key_type k) noexcept {
  return h == hash_kind::mix64 ? mix64(k) : k;
}

/// Left-aligns the low `width` bits of `bits` in a 64-bit word, so that a
/// short bit string such as 0100 can be routed by its leading bits under the
/// identity hash.
inline constexpr std::uint64_t aligned_bits(std::uint64_t bits, unsigned width) noexcept {
  return width == 0 ? 0 : bits << (kKeyBits - width);
}

/// Top `depth` bits of a hash word, i.e. the directory index of the word.
inline constexpr std::uint64_t top_bits(std::uint64_t hash, unsigned depth) noexcept {
  return depth == 0 ? 0 : hash >> (kKeyBits - depth);
}

/// Bit `i` of a hash word counting from the most significant bit (i = 0).
inline constexpr unsigned bit_at(std::uint64_t hash, unsigned i) noexcept {
  return static_cast<unsigned>((hash >> (kKeyBits - 1 - i)) & 1u);
}

/// A bucket prefix: the leading `length` bits that identify the bucket's key
/// set, stored right-aligned in `bits`.
struct prefix {
  std::uint64_t bits = 0;
  unsigned length = 0;

  friend bool operator==(const prefix&, const prefix&) = default;

  [[nodiscard]] bool covers(std::uint64_t hash) const noexcept {
    return top_bits(hash, length) == bits;
  }
  [[nodiscard]] prefix child(unsigned side) const noexcept {
    return prefix{(bits << 1) | side, length + 1};
  }
  /// True when `this` is a proper or improper leading prefix of `other`.
  [[nodiscard]] bool is_prefix_of(const prefix& other) const noexcept {
    return length <= other.length && (other.bits >> (other.length - length)) == bits;
  }
  [[nodiscard]] std::string to_string() const {
    std::string s;
    for (unsigned i = 0; i < length; ++i) {
      s += ((bits >> (length - 1 - i)) & 1u) ? '1' : '0';
    }
    return s;
  }
};

enum class op_kind : std::uint8_t {
  insert,
  erase,
  freeze,
  unfreeze,  // reserved kind; releases ride the directory path instead
  merge,
};

enum class op_status : std::uint8_t {
  none = 0,         // reserved: "no operation ever applied"
  inserted,         // key was absent, now present
  updated,          // key was present, value replaced
  removed,          // key was present, now absent
  absent,           // erase of a key that was not present
  depth_overflow,   // completing the update would exceed max_depth
  frozen_done,      // freeze applied by this operation
  already_frozen,   // freeze target was frozen by someone else
  stale_target,     // freeze/merge target no longer exists at that depth
  merged,           // merge record performed on the covering bucket
};

inline const char* to_string(op_status s) noexcept {
  switch (s) {
    case op_status::none: return "none";
    case op_status::inserted: return "inserted";
    case op_status::updated: return "updated";
    case op_status::removed: return "removed";
    case op_status::absent: return "absent";
    case op_status::depth_overflow: return "depth_overflow";
    case op_status::frozen_done: return "frozen_done";
    case op_status::already_frozen: return "already_frozen";
    case op_status::stale_target: return "stale_target";
    case op_status::merged: return "merged";
  }
  return "?";
}

enum class reclaim_mode : std::uint8_t {
  epoch,  // epoch-based reclamation with block heaps
  leak,   // never reclaim; debugging aid
};

/// Construction-time table parameters.
struct table_config {
  unsigned threads = 4;           // n: fixed helper/announcement slots
  unsigned bucket_capacity = 8;   // b: items per bucket
  unsigned initial_depth = 1;
  unsigned max_depth = 32;        // hard cap, <= 48
  hash_kind hash = hash_kind::mix64;
  reclaim_mode reclaim = reclaim_mode::epoch;
  unsigned retire_batch = 256;    // retired handles per reclamation batch
  unsigned heap_batches = 8;      // local block-heap capacity, in batches
  bool poison = false;            // scribble on reclaimed blocks and check reads
  /// When set, an erase that leaves a sibling pair at or below half a
  /// bucket's capacity requests the merge on the caller's behalf.
  bool auto_merge = false;
};

}  // namespace wfext

#endif  // WFEXT_COMMON_HPP
