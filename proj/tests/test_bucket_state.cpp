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

#include <memory>

#include "doctest.h"
#include "support/oracles.hpp"
#include "wfext/bucket_state.hpp"

using namespace wfext;
using testing::key_bits;

namespace {

struct state_box {
  void* block;
  bucket_state* s;
  state_box(unsigned n, unsigned b)
      : block(::operator new(bucket_state::block_size(n, b))),
        s(bucket_state::init(block, n, b)) {}
  ~state_box() { ::operator delete(block); }
};

op_record ins(key_type k, value_type v, std::uint64_t seq) {
  return {op_kind::insert, k, v, seq};
}
op_record del(key_type k, std::uint64_t seq) { return {op_kind::erase, k, 0, seq}; }

}  // namespace

TEST_CASE("result entries pack seqnum and outcome into one word") {
  const result_entry e = result_entry::make(77, op_status::updated);
  CHECK(e.seqnum() == 77);
  CHECK(e.outcome() == op_status::updated);
  CHECK(result_entry{}.seqnum() == 0);  // seqnum 0: nothing ever applied
}

TEST_CASE("insert and erase on a private copy") {
  state_box box(2, 2);
  bucket_state* s = box.s;

  SUBCASE("insert into empty state") {
    const auto r = s->run(0, ins(key_bits("0001"), 10, 1), 1);
    CHECK(r.applied);
    CHECK(r.status == op_status::inserted);
    CHECK(s->count == 1);
    CHECK(s->result_of(0).seqnum() == 1);
  }

  SUBCASE("insert on a present key updates in place") {
    s->run(0, ins(key_bits("0001"), 10, 1), 1);
    const auto r = s->run(0, ins(key_bits("0001"), 99, 2), 1);
    CHECK(r.status == op_status::updated);
    CHECK(s->count == 1);
    CHECK(s->items()[0].value == 99);
  }

  SUBCASE("insert of a new key into a full state signals full") {
    s->run(0, ins(key_bits("0001"), 1, 1), 1);
    s->run(0, ins(key_bits("0100"), 2, 2), 1);
    REQUIRE(s->full());
    const auto r = s->run(1, ins(key_bits("0010"), 3, 1), 1);
    CHECK_FALSE(r.applied);
    CHECK(s->count == 2);
    CHECK(s->result_of(1).seqnum() == 0);  // nothing recorded
  }

  SUBCASE("erase on a full state signals full without mutating") {
    s->run(0, ins(key_bits("0001"), 1, 1), 1);
    s->run(0, ins(key_bits("0100"), 2, 2), 1);
    const auto r = s->run(1, del(key_bits("0001"), 1), 1);
    CHECK_FALSE(r.applied);
    CHECK(s->count == 2);
    CHECK(s->find(key_bits("0001")) >= 0);
  }

  SUBCASE("erase removes with swap-with-last compaction") {
    state_box big(2, 4);
    big.s->run(0, ins(1, 11, 1), 1);
    big.s->run(0, ins(2, 22, 2), 1);
    big.s->run(0, ins(3, 33, 3), 1);
    const auto r = big.s->run(0, del(1, 4), 1);
    CHECK(r.status == op_status::removed);
    CHECK(big.s->count == 2);
    CHECK(big.s->find(1) < 0);
    CHECK(big.s->find(2) >= 0);
    CHECK(big.s->find(3) >= 0);
  }

  SUBCASE("erase of an absent key reports absent") {
    const auto r = s->run(1, del(key_bits("0111"), 1), 1);
    CHECK(r.applied);
    CHECK(r.status == op_status::absent);
    CHECK(s->count == 0);
  }
}

TEST_CASE("freeze semantics") {
  state_box box(2, 2);
  bucket_state* s = box.s;
  const restructure_payload payload{prefix{0b0, 1}, 2};
  const op_record freeze{op_kind::freeze, key_bits("00"), payload.pack(), 5};

  SUBCASE("freeze marks a non-full state") {
    const auto r = s->run(0, freeze, 2);
    CHECK(r.status == op_status::frozen_done);
    CHECK(s->frozen == 1);
  }
  SUBCASE("freeze of a frozen state reports the conflict") {
    s->run(0, freeze, 2);
    op_record again = freeze;
    again.seqnum = 6;
    const auto r = s->run(1, again, 2);
    CHECK(r.status == op_status::already_frozen);
  }
  SUBCASE("freeze of a full state stays pending") {
    s->run(0, ins(key_bits("0001"), 1, 1), 2);
    s->run(0, ins(key_bits("0010"), 2, 2), 2);
    const auto r = s->run(1, freeze, 2);
    CHECK_FALSE(r.applied);
    CHECK(s->frozen == 0);
  }
  SUBCASE("freeze against a restructured target reports staleness") {
    const auto r = s->run(0, freeze, 1);  // bucket depth no longer matches
    CHECK(r.status == op_status::stale_target);
    CHECK(s->frozen == 0);
  }
}

TEST_CASE("clone copies the whole block") {
  state_box box(3, 3);
  box.s->run(0, ins(key_bits("0001"), 7, 1), 1);
  box.s->run(1, ins(key_bits("0100"), 8, 1), 1);
  box.s->applied_words()[0] = 0b101;

  state_box copy_box(3, 3);
  bucket_state* c = bucket_state::clone(copy_box.block, *box.s);
  CHECK(c->count == 2);
  CHECK(c->find(key_bits("0001")) >= 0);
  CHECK(c->result_of(1).seqnum() == 1);
  CHECK(c->applied_words()[0] == 0b101);

  // The copy is independent.
  c->run(2, del(key_bits("0001"), 1), 1);
  CHECK(box.s->count == 2);
  CHECK(c->count == 1);
}

TEST_CASE("payload packing survives the value word roundtrip") {
  const restructure_payload p{prefix{0b0010, 4}, 5};
  const auto back = restructure_payload::unpack(p.pack());
  CHECK(back.parent == p.parent);
  CHECK(back.target_depth == 5);
}
