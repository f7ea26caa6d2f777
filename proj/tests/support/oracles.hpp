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

#ifndef WFEXT_TESTS_ORACLES_HPP
#define WFEXT_TESTS_ORACLES_HPP

#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <vector>

#include "wfext/common.hpp"

namespace wfext::testing {

/// Reference dictionary with insert-updates-existing-key semantics. Every
/// table outcome must agree with this on single-threaded traces.
class seq_dict {
 public:
  op_status insert(key_type k, value_type v) {
    const auto [it, fresh] = dict_.insert_or_assign(k, v);
    (void)it;
    return fresh ? op_status::inserted : op_status::updated;
  }
  op_status erase(key_type k) {
    return dict_.erase(k) != 0 ? op_status::removed : op_status::absent;
  }
  std::optional<value_type> lookup(key_type k) const {
    const auto it = dict_.find(k);
    if (it == dict_.end()) return std::nullopt;
    return it->second;
  }
  [[nodiscard]] std::size_t size() const { return dict_.size(); }

 private:
  std::map<key_type, value_type> dict_;
};

/// Plain sequential extendible-hashing simulator, structured nothing like
/// the concurrent table: buckets live in a map keyed by prefix. Used to
/// predict directory depth and bucket layout independently.
class extendible_sim {
 public:
  extendible_sim(unsigned bucket_capacity, unsigned initial_depth, hash_kind hash)
      : capacity_(bucket_capacity), depth_(initial_depth), hash_(hash) {
    buckets_[{0, 1}] = {};
    buckets_[{1, 1}] = {};
  }

  void insert(key_type key) {
    const std::uint64_t h = apply_hash(hash_, key);
    for (;;) {
      const auto pfx = bucket_of(h);
      auto& items = buckets_[pfx];
      // Full buckets take no update at all, not even a value overwrite;
      // they must split first.
      if (items.size() >= capacity_) {
        split(pfx);
        continue;
      }
      for (auto& it : items) {
        if (it == key) return;  // update; contents unchanged
      }
      items.push_back(key);
      return;
    }
  }

  [[nodiscard]] unsigned depth() const { return depth_; }
  [[nodiscard]] std::size_t bucket_count() const { return buckets_.size(); }

  [[nodiscard]] std::vector<key_type> bucket_items(std::uint64_t bits, unsigned len) const {
    const auto it = buckets_.find({bits, len});
    if (it == buckets_.end()) return {};
    return it->second;
  }

 private:
  using pfx = std::pair<std::uint64_t, unsigned>;  // (bits, length)

  pfx bucket_of(std::uint64_t h) const {
    // Longest stored prefix of the hash word; buckets partition the space.
    for (unsigned len = depth_; len >= 1; --len) {
      const pfx candidate{top_bits(h, len), len};
      if (buckets_.count(candidate) != 0) return candidate;
    }
    return {top_bits(h, 1), 1};
  }

  void split(const pfx& victim) {
    auto items = buckets_.at(victim);
    buckets_.erase(victim);
    const unsigned child_len = victim.second + 1;
    if (child_len > depth_) ++depth_;
    const pfx c0{victim.first << 1, child_len};
    const pfx c1{(victim.first << 1) | 1, child_len};
    buckets_[c0] = {};
    buckets_[c1] = {};
    for (const key_type k : items) {
      const std::uint64_t h = apply_hash(hash_, k);
      buckets_[top_bits(h, child_len) == c0.first ? c0 : c1].push_back(k);
    }
  }

  unsigned capacity_;
  unsigned depth_;
  hash_kind hash_;
  std::map<pfx, std::vector<key_type>> buckets_;
};

/// Builds a key from a bit-string literal, left-aligned so the identity
/// hash routes it by its leading characters: key_bits("0100") behaves like
/// the 4-bit string 0100.
inline key_type key_bits(const char* s) {
  std::uint64_t v = 0;
  unsigned len = 0;
  for (const char* p = s; *p != '\0'; ++p) {
    v = (v << 1) | static_cast<std::uint64_t>(*p == '1');
    ++len;
  }
  return aligned_bits(v, len);
}

}  // namespace wfext::testing

#endif  // WFEXT_TESTS_ORACLES_HPP
