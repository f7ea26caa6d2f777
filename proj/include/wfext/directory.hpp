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

#ifndef WFEXT_DIRECTORY_HPP
#define WFEXT_DIRECTORY_HPP

#include <cassert>
#include <cstdint>
#include <cstring>
#include <new>

#include "wfext/bucket.hpp"
#include "wfext/common.hpp"

namespace wfext {

/// Directory snapshot: depth D plus 2^D bucket references, immutable once
/// published into the table. Each distinct bucket of depth d occupies
/// exactly 2^(D - d) consecutive entries. Laid out as [header | entries].
class directory_state {
 public:
  std::uint32_t depth;

  static std::size_t block_size(unsigned depth) noexcept {
    return sizeof(directory_state) + (std::size_t{1} << depth) * sizeof(bucket*);
  }

  static directory_state* init(void* block, unsigned depth) noexcept {
    auto* d = static_cast<directory_state*>(block);
    d->depth = depth;
    return d;
  }

  static directory_state* clone(void* block, const directory_state& src) noexcept {
    std::memcpy(block, &src, block_size(src.depth));
    return static_cast<directory_state*>(block);
  }

  [[nodiscard]] std::size_t size() const noexcept { return std::size_t{1} << depth; }

  [[nodiscard]] bucket** entries() noexcept {
    return reinterpret_cast<bucket**>(this + 1);
  }
  [[nodiscard]] bucket* const* entries() const noexcept {
    return reinterpret_cast<bucket* const*>(this + 1);
  }

  /// Routes by the top `depth` bits of an already-hashed word.
  [[nodiscard]] bucket* route(std::uint64_t hash_bits) const noexcept {
    return entries()[top_bits(hash_bits, depth)];
  }

  /// First directory entry owned by `p`; `p` owns 1 << (depth - p.length)
  /// consecutive entries.
  [[nodiscard]] std::size_t range_begin(const prefix& p) const noexcept {
    assert(p.length <= depth);
    return static_cast<std::size_t>(p.bits) << (depth - p.length);
  }
  [[nodiscard]] std::size_t range_size(const prefix& p) const noexcept {
    return std::size_t{1} << (depth - p.length);
  }

  /// Points every entry owned by b->pfx at b. Only valid on private copies.
  void install(bucket* b) noexcept {
    const std::size_t begin = range_begin(b->pfx);
    const std::size_t n = range_size(b->pfx);
    for (std::size_t i = 0; i < n; ++i) entries()[begin + i] = b;
  }
};

/// Doubles a private directory copy until it can address `target_depth`,
/// copying each old entry e into new entries 2e and 2e+1. Frees the old
/// private block and returns the replacement.
inline directory_state* grow_directory(directory_state* local, unsigned target_depth) {
  while (local->depth < target_depth) {
    const unsigned new_depth = local->depth + 1;
    auto* next =
        directory_state::init(::operator new(directory_state::block_size(new_depth)), new_depth);
    bucket** src = local->entries();
    bucket** dst = next->entries();
    for (std::size_t e = 0; e < local->size(); ++e) {
      dst[2 * e] = src[e];
      dst[2 * e + 1] = src[e];
    }
    ::operator delete(local);
    local = next;
  }
  return local;
}

/// Installs a freshly split pair into a private directory copy, doubling it
/// first when the children are deeper than the directory. Callers must have
/// checked the max-depth cap.
inline directory_state* directory_update(directory_state* local, bucket* b0, bucket* b1) {
  assert(b0->depth() == b1->depth());
  local = grow_directory(local, b0->depth());
  local->install(b0);
  local->install(b1);
  return local;
}

/// Halves a private directory copy while every entry pair (2e, 2e+1) refers
/// to the same bucket and the depth stays above 1. Shrinks in place; the
/// block keeps its allocated size and only the logical depth changes.
inline bool shrink_directory(directory_state* local) noexcept {
  bool shrunk = false;
  while (local->depth > 1) {
    bucket** e = local->entries();
    const std::size_t half = local->size() / 2;
    bool collapsible = true;
    for (std::size_t i = 0; i < half; ++i) {
      if (e[2 * i] != e[2 * i + 1]) {
        collapsible = false;
        break;
      }
    }
    if (!collapsible) break;
    for (std::size_t i = 0; i < half; ++i) e[i] = e[2 * i];
    --local->depth;
    shrunk = true;
  }
  return shrunk;
}

}  // namespace wfext

#endif  // WFEXT_DIRECTORY_HPP
