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

#ifndef WFEXT_OP_RECORD_HPP
#define WFEXT_OP_RECORD_HPP

#include <cassert>
#include <cstdint>

#include "wfext/common.hpp"

namespace wfext {

/// Payload of freeze/merge records, packed into the value word.
/// The merge parent prefix sits left-aligned in the top 48 bits; the low
/// bytes carry the parent length and the depth of the targeted bucket.
struct restructure_payload {
  prefix parent;
  unsigned target_depth = 0;

  [[nodiscard]] std::uint64_t pack() const noexcept {
    assert(parent.length <= kMaxDepthLimit && target_depth <= kMaxDepthLimit);
    return aligned_bits(parent.bits, parent.length) |
           (static_cast<std::uint64_t>(parent.length) << 8) |
           static_cast<std::uint64_t>(target_depth);
  }
  static restructure_payload unpack(std::uint64_t v) noexcept {
    restructure_payload p;
    p.parent.length = static_cast<unsigned>((v >> 8) & 0xff);
    p.parent.bits = top_bits(v, p.parent.length);
    p.target_depth = static_cast<unsigned>(v & 0xff);
    return p;
  }
};

/// One announced operation. Records are immutable once published in the
/// announcement array; a thread announces by swinging a pointer to a fresh
/// record, so helpers never observe a half-written one.
struct op_record {
  op_kind kind = op_kind::insert;
  key_type key = 0;     // for freeze/merge: left-aligned routing bits, not a key
  value_type value = 0;  // for freeze/merge: packed restructure_payload
  std::uint64_t seqnum = 0;

  [[nodiscard]] bool is_update() const noexcept {
    return kind == op_kind::insert || kind == op_kind::erase;
  }
  /// Routing bits in hash space. Update keys are hashed; restructure records
  /// already carry raw directory bits.
  [[nodiscard]] std::uint64_t route_bits(hash_kind h) const noexcept {
    return is_update() ? apply_hash(h, key) : key;
  }
};

}  // namespace wfext

#endif  // WFEXT_OP_RECORD_HPP
