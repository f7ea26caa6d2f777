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

#ifndef WFEXT_BUCKET_HPP
#define WFEXT_BUCKET_HPP

#include <atomic>
#include <cassert>
#include <cstdint>
#include <new>

#include "wfext/bucket_state.hpp"
#include "wfext/common.hpp"

namespace wfext {

/// Long-lived bucket identity. The prefix never changes; all content changes
/// go through the `state` pointer. The toggle vector is the per-bucket
/// announcement board: bit j differing from bit j of state->applied marks a
/// potentially pending operation by thread j.
///
/// Laid out as [header | toggle words] in one block.
class bucket {
 public:
  prefix pfx;
  std::atomic<bucket_state*> state;

  static std::size_t block_size(unsigned threads) noexcept {
    return sizeof(bucket) + word_count(threads) * sizeof(std::atomic<std::uint64_t>);
  }

  static bucket* init(void* block, prefix p, bucket_state* initial,
                      unsigned threads) noexcept {
    auto* b = new (block) bucket();
    b->pfx = p;
    b->state.store(initial, std::memory_order_relaxed);
    for (unsigned w = 0; w < word_count(threads); ++w) {
      new (b->toggle_words() + w) std::atomic<std::uint64_t>(0);
    }
    return b;
  }

  [[nodiscard]] unsigned depth() const noexcept { return pfx.length; }

  /// Flips the caller's announcement bit with one atomic add. Bit j is
  /// written only by thread j, so reading it to pick the sign is race-free,
  /// and signed adds of a bit's own weight never carry into neighbours.
  void flip_toggle(unsigned tid) noexcept {
    auto& word = toggle_words()[tid / 64];
    const std::uint64_t weight = 1ULL << (tid % 64);
    if (word.load(std::memory_order_relaxed) & weight) {
      word.fetch_sub(weight, std::memory_order_seq_cst);
    } else {
      word.fetch_add(weight, std::memory_order_seq_cst);
    }
  }

  /// Reads the toggle vector word by word. Callers must load the bucket
  /// state first; the seqnum guard makes word-level tearing harmless, the
  /// toggle is only a fast filter.
  void load_toggle(std::uint64_t* dst, unsigned threads) const noexcept {
    for (unsigned w = 0; w < word_count(threads); ++w) {
      dst[w] = toggle_words()[w].load(std::memory_order_seq_cst);
    }
  }

  [[nodiscard]] std::atomic<std::uint64_t>* toggle_words() noexcept {
    return reinterpret_cast<std::atomic<std::uint64_t>*>(this + 1);
  }
  [[nodiscard]] const std::atomic<std::uint64_t>* toggle_words() const noexcept {
    return reinterpret_cast<const std::atomic<std::uint64_t>*>(this + 1);
  }

  static unsigned word_count(unsigned threads) noexcept { return (threads + 63) / 64; }

 private:
  bucket() = default;
};

}  // namespace wfext

#endif  // WFEXT_BUCKET_HPP
