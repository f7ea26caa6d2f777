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

#ifndef WFEXT_BASELINE_HPP
#define WFEXT_BASELINE_HPP

#include <mutex>
#include <optional>
#include <vector>

#include "wfext/common.hpp"

namespace wfext {

/// Blocking comparator: a fixed-size, non-resizable table with one lock per
/// bucket. Buckets are unbounded chains, so no resize ever occurs; every
/// operation, lookups included, acquires the bucket lock.
class locked_table {
 public:
  explicit locked_table(unsigned depth, hash_kind hash = hash_kind::mix64)
      : hash_(hash), depth_(depth), shards_(std::size_t{1} << depth) {}

  op_status insert(key_type key, value_type value) {
    shard& s = shard_of(key);
    std::lock_guard<std::mutex> lock(s.mtx);
    for (auto& it : s.items) {
      if (it.first == key) {
        it.second = value;
        return op_status::updated;
      }
    }
    s.items.emplace_back(key, value);
    return op_status::inserted;
  }

  op_status erase(key_type key) {
    shard& s = shard_of(key);
    std::lock_guard<std::mutex> lock(s.mtx);
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      if (s.items[i].first == key) {
        s.items[i] = s.items.back();
        s.items.pop_back();
        return op_status::removed;
      }
    }
    return op_status::absent;
  }

  std::optional<value_type> lookup(key_type key) {
    shard& s = shard_of(key);
    std::lock_guard<std::mutex> lock(s.mtx);
    for (const auto& it : s.items) {
      if (it.first == key) return it.second;
    }
    return std::nullopt;
  }

  [[nodiscard]] std::size_t bucket_count() const noexcept { return shards_.size(); }

 private:
  struct shard {
    std::mutex mtx;
    std::vector<std::pair<key_type, value_type>> items;
  };

  // Same routing rule as the resizable table: top bits of the hash.
  shard& shard_of(key_type key) noexcept {
    return shards_[static_cast<std::size_t>(top_bits(apply_hash(hash_, key), depth_))];
  }

  hash_kind hash_;
  unsigned depth_;
  std::vector<shard> shards_;
};

}  // namespace wfext

#endif  // WFEXT_BASELINE_HPP
