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

#include "wfext/table.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>
#include <stdexcept>

namespace wfext {

namespace {

constexpr unsigned kMaxThreads = 1024;

void* raw_alloc(std::size_t bytes) { return ::operator new(bytes); }
void raw_free(void* p) noexcept { ::operator delete(p); }

}  // namespace

// ---------------------------------------------------------------------------
// Resize transactions
// ---------------------------------------------------------------------------

/// Private working set of one directory publication attempt. Buckets created
/// here stay invisible until the directory CAS succeeds, so they can be
/// written in place; on failure everything is handed back to the allocator.
struct hash_table::dir_txn {
  directory_state* snapshot = nullptr;
  directory_state* local = nullptr;
  std::vector<bucket*> fresh;     // created in this transaction
  std::vector<bucket*> replaced;  // published buckets unlinked if we win
  bool changed = false;
  unsigned merges = 0;

  [[nodiscard]] bool is_fresh(const bucket* b) const noexcept {
    return std::find(fresh.begin(), fresh.end(), b) != fresh.end();
  }

  void note_fresh(bucket* b) { fresh.push_back(b); }

  /// The bucket was just unlinked from `local`. Private buckets die right
  /// away, published ones are retired only if the transaction commits.
  void consume(bucket* b, reclaimer& mem, unsigned tid) {
    auto it = std::find(fresh.begin(), fresh.end(), b);
    if (it != fresh.end()) {
      fresh.erase(it);
      mem.free_state(tid, b->state.load(std::memory_order_relaxed));
      raw_free(b);
    } else {
      replaced.push_back(b);
    }
  }

  void rollback(reclaimer& mem, unsigned tid) {
    for (bucket* b : fresh) {
      mem.free_state(tid, b->state.load(std::memory_order_relaxed));
      raw_free(b);
    }
    fresh.clear();
    replaced.clear();
    if (local != nullptr) raw_free(local);
    local = nullptr;
  }
};

struct hash_table::release_action {
  std::vector<bucket*> victims;  // buckets frozen by the aborting merge
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

hash_table::hash_table(table_config cfg) : cfg_(cfg) {
  if (cfg_.threads == 0 || cfg_.threads > kMaxThreads) {
    throw std::invalid_argument("thread count out of range");
  }
  if (cfg_.bucket_capacity == 0 || cfg_.bucket_capacity > 0xffff) {
    throw std::invalid_argument("bucket capacity out of range");
  }
  if (cfg_.max_depth == 0 || cfg_.max_depth > kMaxDepthLimit) {
    throw std::invalid_argument("max depth out of range");
  }
  if (cfg_.initial_depth == 0 || cfg_.initial_depth > cfg_.max_depth) {
    throw std::invalid_argument("initial depth out of range");
  }
  if (cfg_.retire_batch == 0) throw std::invalid_argument("retire batch must be positive");

  reclaim_ = std::make_unique<reclaimer>(
      cfg_.threads, cfg_.reclaim, cfg_.retire_batch, cfg_.heap_batches,
      bucket_state::block_size(cfg_.threads, cfg_.bucket_capacity), cfg_.poison);
  quarantine_state_ = bucket_state::init(
      raw_alloc(bucket_state::block_size(cfg_.threads, cfg_.bucket_capacity)), cfg_.threads,
      cfg_.bucket_capacity);
  help_ = std::vector<std::atomic<const op_record*>>(cfg_.threads);
  for (auto& h : help_) h.store(nullptr, std::memory_order_relaxed);

  // Fresh tables hold two depth-1 buckets; the directory may be pre-sized
  // deeper so early splits do not have to double it.
  bucket* b0 = make_bucket(0, prefix{0, 1}, nullptr);
  bucket* b1 = make_bucket(0, prefix{1, 1}, nullptr);
  auto* d = directory_state::init(raw_alloc(directory_state::block_size(cfg_.initial_depth)),
                                  cfg_.initial_depth);
  d->install(b0);
  d->install(b1);
  dir_.store(d, std::memory_order_release);
}

hash_table::~hash_table() {
  directory_state* d = dir_.load(std::memory_order_relaxed);
  bucket* prev = nullptr;
  for (std::size_t i = 0; i < d->size(); ++i) {
    bucket* b = d->entries()[i];
    if (b == prev) continue;
    prev = b;
    raw_free(b->state.load(std::memory_order_relaxed));
    raw_free(b);
  }
  raw_free(d);
  raw_free(quarantine_state_);
  for (auto& h : help_) {
    const op_record* r = h.load(std::memory_order_relaxed);
    if (r != nullptr) raw_free(const_cast<op_record*>(r));
  }
}

bucket* hash_table::make_bucket(unsigned tid, prefix p, const bucket_state* from) {
  bucket_state* st;
  if (from != nullptr) {
    st = bucket_state::clone(reclaim_->alloc_state(tid), *from);
    // Fresh buckets start with an all-zero toggle; a matching applied vector
    // means "no pending operations visible".
    std::memset(st->applied_words(), 0, st->word_count * sizeof(std::uint64_t));
  } else {
    st = bucket_state::init(reclaim_->alloc_state(tid), cfg_.threads, cfg_.bucket_capacity);
  }
  return bucket::init(raw_alloc(bucket::block_size(cfg_.threads)), p, st, cfg_.threads);
}

std::optional<thread_context> hash_table::register_thread() {
  const unsigned id = registered_.fetch_add(1, std::memory_order_relaxed);
  if (id >= cfg_.threads) {
    registered_.fetch_sub(1, std::memory_order_relaxed);
    return std::nullopt;
  }
  return thread_context(this, id);
}

void hash_table::set_quiescent(thread_context& ctx) noexcept {
  reclaim_->set_quiescent(ctx.tid_);
}

// ---------------------------------------------------------------------------
// Reads
// ---------------------------------------------------------------------------

bucket_state* hash_table::state_checked(const bucket* b) const noexcept {
  bucket_state* s = b->state.load(std::memory_order_seq_cst);
  if (reclaim_->poisoning()) {
    if (s->threads != cfg_.threads || s->capacity != cfg_.bucket_capacity ||
        s->count > s->capacity) {
      // The snapshot header was scribbled over: the block was reclaimed while
      // still reachable. Count it and divert the reader to a harmless state;
      // the run is already condemned.
      poison_violations_.fetch_add(1, std::memory_order_relaxed);
      return quarantine_state_;
    }
  }
  return s;
}

std::optional<value_type> hash_table::lookup_unguarded(key_type key) const noexcept {
  // Same code a sequential table would run: snapshot the directory pointer,
  // route, read one immutable state, scan.
  const directory_state* d = dir_.load(std::memory_order_acquire);
  const bucket* b = d->route(apply_hash(cfg_.hash, key));
  const bucket_state* s = state_checked(b);
  const int at = s->find(key);
  if (at < 0) return std::nullopt;
  return s->items()[at].value;
}

std::optional<value_type> hash_table::lookup(thread_context& ctx, key_type key) noexcept {
  reclaim_->op_begin(ctx.tid_);
  ++ctx.stats_.lookups;
  return lookup_unguarded(key);
}

// ---------------------------------------------------------------------------
// Update path
// ---------------------------------------------------------------------------

const op_record* hash_table::announce(thread_context& ctx, op_record rec) {
  auto* fresh = new (raw_alloc(sizeof(op_record))) op_record(rec);
  const op_record* old = help_[ctx.tid_].exchange(fresh, std::memory_order_seq_cst);
  if (old != nullptr) {
    reclaim_->retire(ctx.tid_, const_cast<op_record*>(old), object_kind::raw_block);
  }
  return fresh;
}

op_status hash_table::insert(thread_context& ctx, key_type key, value_type value) {
  return run_update(ctx, op_kind::insert, key, value);
}

op_status hash_table::erase(thread_context& ctx, key_type key) {
  const op_status st = run_update(ctx, op_kind::erase, key, 0);
  if (st == op_status::removed && cfg_.auto_merge) maybe_auto_merge(ctx, key);
  return st;
}

void hash_table::maybe_auto_merge(thread_context& ctx, key_type key) {
  const directory_state* d = dir_.load(std::memory_order_seq_cst);
  const bucket* b = d->route(apply_hash(cfg_.hash, key));
  if (b->depth() < 2) return;
  const prefix parent{b->pfx.bits >> 1, b->pfx.length - 1};
  unsigned total = 0;
  const std::size_t begin = d->range_begin(parent);
  const std::size_t count = d->range_size(parent);
  const bucket* prev = nullptr;
  for (std::size_t i = 0; i < count; ++i) {
    const bucket* p = d->entries()[begin + i];
    if (p == prev) continue;
    prev = p;
    const bucket_state* s = p->state.load(std::memory_order_seq_cst);
    if (s->frozen) return;  // someone is already merging here
    total += s->count;
  }
  if (total > cfg_.bucket_capacity / 2) return;
  (void)request_merge(ctx, parent);  // best effort; races may abort it
}

op_status hash_table::run_update(thread_context& ctx, op_kind kind, key_type key,
                                 value_type value) {
  reclaim_->op_begin(ctx.tid_);
  ++ctx.stats_.updates;
  const op_record* rec = announce(ctx, {kind, key, value, ++ctx.seqnum_});
  for (unsigned spin = 0;; ++spin) {
    // Bounded: every full destination is resolved by the resize pass, and
    // only resizers already in flight at announce time can miss the record.
    assert(spin < (1u << 20) && "update retry runaway");
    (void)spin;
    directory_state* d = dir_.load(std::memory_order_seq_cst);
    bucket* bkt = d->route(route_of(*rec));
    const apply_result r = apply_update(ctx, bkt, *rec);
    switch (r.code) {
      case apply_code::applied:
        return r.status;
      case apply_code::full:
      case apply_code::frozen:
        // Full: our operation is a pending resize action until some
        // publication splits the destination and executes it. Frozen: a
        // merge owns the destination; help it through before re-routing.
        run_resize(ctx, nullptr);
        break;
      case apply_code::moved:
        break;  // the directory changed under us; re-route
    }
  }
}

auto hash_table::apply_update(thread_context& ctx, bucket* bkt, const op_record& rec)
    -> apply_result {
  bkt->flip_toggle(ctx.tid_);
  if (fp_.after_announce_flip) fp_.after_announce_flip(ctx.tid_);

  const unsigned words = bucket::word_count(cfg_.threads);
  std::uint64_t toggles[kMaxThreads / 64];
  unsigned attempts = 0;
  apply_result out{apply_code::moved, op_status::none};
  bool settled = false;

  for (int iter = 0; iter < 2 && !settled; ++iter) {
    bucket_state* snap = state_checked(bkt);
    const result_entry mine = snap->result_of(ctx.tid_);
    if (mine.seqnum() == rec.seqnum) {
      out = {apply_code::applied, mine.outcome()};
      break;
    }
    if (snap->full()) {
      out = {apply_code::full, op_status::none};
      break;
    }
    if (snap->frozen && rec.kind != op_kind::freeze) {
      out = {apply_code::frozen, op_status::none};
      break;
    }

    bucket_state* copy = bucket_state::clone(reclaim_->alloc_state(ctx.tid_), *snap);
    // The toggle is read after the state snapshot; this order is what makes
    // the two-attempt bound sound.
    bkt->load_toggle(toggles, cfg_.threads);

    for (unsigned k = 1; k <= cfg_.threads; ++k) {
      const unsigned j = (ctx.tid_ + k) % cfg_.threads;
      const bool hinted =
          ((toggles[j / 64] ^ copy->applied_words()[j / 64]) >> (j % 64)) & 1u;
      if (!hinted) continue;
      const op_record* r = (j == ctx.tid_) ? &rec : help_[j].load(std::memory_order_seq_cst);
      if (r == nullptr) continue;
#ifndef WFEXT_MUTATION_SKIP_SEQNUM_GUARD
      if (r->seqnum <= copy->result_of(j).seqnum()) continue;  // already executed
#endif
      if (r->kind == op_kind::merge || r->kind == op_kind::unfreeze) continue;
      if (!bkt->pfx.covers(route_of(*r))) continue;
      if (copy->frozen && r->kind != op_kind::freeze) continue;  // pends until the merge resolves
      copy->run(j, *r, bkt->depth());  // a full signal just leaves the op pending
    }
    std::memcpy(copy->applied_words(), toggles, words * sizeof(std::uint64_t));

    const result_entry mine2 = copy->result_of(ctx.tid_);
    ++attempts;
    if (fp_.before_bucket_publish) fp_.before_bucket_publish(ctx.tid_);
    bucket_state* expected = snap;
    if (bkt->state.compare_exchange_strong(expected, copy, std::memory_order_seq_cst)) {
      reclaim_->retire(ctx.tid_, snap, object_kind::state_block);
      if (mine2.seqnum() == rec.seqnum) {
        out = {apply_code::applied, mine2.outcome()};
      } else if (copy->full()) {
        out = {apply_code::full, op_status::none};
      } else if (copy->frozen && rec.kind != op_kind::freeze) {
        out = {apply_code::frozen, op_status::none};
      } else {
        out = {apply_code::moved, op_status::none};
      }
      settled = true;
      break;
    }
    reclaim_->free_state(ctx.tid_, copy);
  }

  if (!settled && out.code == apply_code::moved && attempts == 2) {
    // Both attempts lost their CAS. The second winner read the toggle after
    // our flip became visible and so either executed our record or was
    // blocked by fullness or freezing; the current state tells which.
    bucket_state* cur = state_checked(bkt);
    const result_entry mine = cur->result_of(ctx.tid_);
    if (mine.seqnum() == rec.seqnum) {
      out = {apply_code::applied, mine.outcome()};
    } else if (cur->full()) {
      out = {apply_code::full, op_status::none};
    } else if (cur->frozen && rec.kind != op_kind::freeze) {
      out = {apply_code::frozen, op_status::none};
    }
  }

  ctx.stats_.bucket_cas_attempts += attempts;
  ctx.stats_.max_bucket_cas_per_apply =
      std::max(ctx.stats_.max_bucket_cas_per_apply, attempts);
  return out;
}

// ---------------------------------------------------------------------------
// Directory path
// ---------------------------------------------------------------------------

bool hash_table::run_resize(thread_context& ctx, const release_action* release) {
  unsigned publishes = 0;
  bool published = false;

  for (int iter = 0; iter < 2 && !published; ++iter) {
    dir_txn txn;
    txn.snapshot = dir_.load(std::memory_order_seq_cst);
    txn.local = directory_state::clone(raw_alloc(directory_state::block_size(txn.snapshot->depth)),
                                       *txn.snapshot);

    // One announcement snapshot per iteration; records published after this
    // point belong to the next resizer.
    std::vector<const op_record*> recs(cfg_.threads);
    for (unsigned j = 0; j < cfg_.threads; ++j) {
      recs[j] = help_[j].load(std::memory_order_seq_cst);
    }

    unsigned pending_calls = 0;
    for (unsigned j = 0; j < cfg_.threads; ++j) {
      const op_record* r = recs[j];
      if (r == nullptr) continue;
      if (r->is_update()) {
        bucket* dest = txn.local->route(route_of(*r));
        const bucket_state* ds = state_checked(dest);
        if (ds->full() && r->seqnum > ds->result_of(j).seqnum()) {
          split_pending(ctx, txn, dest, recs.data());
          ++pending_calls;
        }
      } else if (r->kind == op_kind::merge) {
        complete_merge(ctx, txn, *r, j);
      }
      // freeze records never force splits: a freeze blocked on a full
      // bucket makes the requesting merge fail instead.
    }

    if (release != nullptr) {
      for (bucket* v : release->victims) {
        if (v->pfx.length > txn.local->depth) continue;
        if (txn.local->entries()[txn.local->range_begin(v->pfx)] != v) continue;
        const bucket_state* vs = state_checked(v);
        if (!vs->frozen) continue;
        bucket* nb = make_bucket(ctx.tid_, v->pfx, vs);
        nb->state.load(std::memory_order_relaxed)->frozen = 0;
        txn.local->install(nb);
        txn.note_fresh(nb);
        txn.replaced.push_back(v);
        txn.changed = true;
      }
    }

    ++publishes;
    ctx.stats_.max_pending_calls_per_resize =
        std::max(ctx.stats_.max_pending_calls_per_resize, pending_calls);
    if (fp_.before_directory_publish) fp_.before_directory_publish(ctx.tid_);

    directory_state* expected = txn.snapshot;
    if (dir_.compare_exchange_strong(expected, txn.local, std::memory_order_seq_cst)) {
      directory_publishes_.fetch_add(1, std::memory_order_relaxed);
      if (txn.merges > 0) merge_count_.fetch_add(txn.merges, std::memory_order_relaxed);
      reclaim_->retire(ctx.tid_, txn.snapshot, object_kind::dir_block);
      for (bucket* b : txn.replaced) {
        reclaim_->retire(ctx.tid_, b, object_kind::bucket_block);
      }
      published = true;
    } else {
      txn.rollback(*reclaim_, ctx.tid_);
    }
  }

  ctx.stats_.resize_publish_attempts += publishes;
  ctx.stats_.max_publish_per_resize =
      std::max(ctx.stats_.max_publish_per_resize, publishes);
  return published;
}

void hash_table::split_pending(thread_context& ctx, dir_txn& txn, bucket* full_bucket,
                               const op_record* const* records) {
  // Membership is fixed at entry: the operations this call must complete are
  // the pending ones the full bucket's prefix covers. The bucket itself is
  // replaced by the first split below.
  const prefix owner = full_bucket->pfx;
  const bucket_state* owner_state = state_checked(full_bucket);

  for (unsigned j = 0; j < cfg_.threads; ++j) {
    const op_record* r = records[j];
    if (r == nullptr || !r->is_update()) continue;
    const std::uint64_t bits = route_of(*r);
    if (!owner.covers(bits)) continue;
    if (r->seqnum <= owner_state->result_of(j).seqnum()) continue;

    bucket* dest = txn.local->route(bits);
    bool overflowed = false;
    while (true) {
      bucket_state* ds = txn.is_fresh(dest) ? dest->state.load(std::memory_order_relaxed)
                                            : state_checked(dest);
      if (!ds->full()) break;
      if (dest->depth() >= cfg_.max_depth) {
        record_overflow(ctx, txn, dest, j, *r);
        overflowed = true;
        break;
      }
      auto [child0, child1] = split_bucket(ctx, dest);
      txn.local = directory_update(txn.local, child0, child1);
      txn.note_fresh(child0);
      txn.note_fresh(child1);
      txn.consume(dest, *reclaim_, ctx.tid_);
      txn.changed = true;
      dest = txn.local->route(bits);
    }
    if (overflowed) continue;

    // Splitting replaced every bucket under `owner` with private ones, so
    // the destination can be written in place, no CAS required.
    assert(txn.is_fresh(dest));
    bucket_state* ds = dest->state.load(std::memory_order_relaxed);
    const exec_result er = ds->run(j, *r, dest->depth());
    assert(er.applied);
    (void)er;
    txn.changed = true;
  }
}

void hash_table::record_overflow(thread_context& ctx, dir_txn& txn, bucket* dest,
                                 unsigned tid, const op_record& rec) {
  // The table cannot grow past max_depth; terminate the operation with an
  // error result the owner will read through the normal result channel.
  if (txn.is_fresh(dest)) {
    dest->state.load(std::memory_order_relaxed)->results()[tid] =
        result_entry::make(rec.seqnum, op_status::depth_overflow);
    txn.changed = true;
    return;
  }
  const bucket_state* src = state_checked(dest);
  bucket* nb = make_bucket(ctx.tid_, dest->pfx, src);
  nb->state.load(std::memory_order_relaxed)->results()[tid] =
      result_entry::make(rec.seqnum, op_status::depth_overflow);
  txn.local->install(nb);
  txn.note_fresh(nb);
  txn.replaced.push_back(dest);
  txn.changed = true;
}

std::pair<bucket*, bucket*> hash_table::split_bucket(thread_context& ctx,
                                                     const bucket* parent) {
  const bucket_state* ps = parent->state.load(std::memory_order_seq_cst);
  assert(ps->full() && "only full buckets split");
  assert(!ps->frozen && "frozen buckets are never full");

  bucket* child0 = make_bucket(ctx.tid_, parent->pfx.child(0), nullptr);
  bucket* child1 = make_bucket(ctx.tid_, parent->pfx.child(1), nullptr);
  bucket_state* s0 = child0->state.load(std::memory_order_relaxed);
  bucket_state* s1 = child1->state.load(std::memory_order_relaxed);

  // Both children inherit the parent's result entries so the exactly-once
  // guard keeps holding across the move.
  std::memcpy(s0->results(), ps->results(), cfg_.threads * sizeof(result_entry));
  std::memcpy(s1->results(), ps->results(), cfg_.threads * sizeof(result_entry));

  const unsigned split_bit = parent->depth();  // next routing bit, 0-based from MSB
  for (unsigned i = 0; i < ps->count; ++i) {
    const item& it = ps->items()[i];
    bucket_state* target =
        bit_at(apply_hash(cfg_.hash, it.key), split_bit) == 0 ? s0 : s1;
    target->items()[target->count++] = it;
  }
  split_count_.fetch_add(1, std::memory_order_relaxed);
  return {child0, child1};
}

void hash_table::complete_merge(thread_context& ctx, dir_txn& txn, const op_record& rec,
                                unsigned owner) {
  const auto payload = restructure_payload::unpack(rec.value);
  const prefix parent = payload.parent;
  if (parent.length == 0 || parent.length > txn.local->depth) return;

  bucket* at = txn.local->route(aligned_bits(parent.bits, parent.length));
  {
    const bucket_state* s = txn.is_fresh(at) ? at->state.load(std::memory_order_relaxed)
                                             : state_checked(at);
    // Result inheritance through splits and merges makes this tag survive
    // later restructuring, so a stale record is never performed twice.
    if (s->result_of(owner).seqnum() >= rec.seqnum) return;
  }
  if (at->depth() <= parent.length) return;  // already merged by structure

  // Collect the distinct buckets covering the parent range; the merge can
  // go ahead only once the requester froze every one of them.
  std::vector<bucket*> parts;
  const std::size_t begin = txn.local->range_begin(parent);
  const std::size_t count = txn.local->range_size(parent);
  for (std::size_t i = 0; i < count; ++i) {
    bucket* b = txn.local->entries()[begin + i];
    if (parts.empty() || parts.back() != b) parts.push_back(b);
  }

  unsigned total = 0;
  for (bucket* p : parts) {
    const bucket_state* s = state_checked(p);
    if (!s->frozen) return;  // phase 1 still in flight
    total += s->count;
  }
  if (total > cfg_.bucket_capacity) return;  // requester aborts instead

  bucket* merged = make_bucket(ctx.tid_, parent, nullptr);
  bucket_state* ms = merged->state.load(std::memory_order_relaxed);
  for (bucket* p : parts) {
    const bucket_state* s = state_checked(p);
    for (unsigned i = 0; i < s->count; ++i) ms->items()[ms->count++] = s->items()[i];
    for (unsigned j = 0; j < cfg_.threads; ++j) {
      if (s->result_of(j).seqnum() > ms->result_of(j).seqnum()) {
        ms->results()[j] = s->results()[j];
      }
    }
  }
  ms->results()[owner] = result_entry::make(rec.seqnum, op_status::merged);

  txn.local->install(merged);
  txn.note_fresh(merged);
  for (bucket* p : parts) txn.replaced.push_back(p);
  shrink_directory(txn.local);
  txn.changed = true;
  ++txn.merges;
}

// ---------------------------------------------------------------------------
// Merging
// ---------------------------------------------------------------------------

merge_status hash_table::request_merge(thread_context& ctx, prefix parent) {
  if (parent.length < 1 || parent.length > cfg_.max_depth) return merge_status::failed_stale;
  reclaim_->op_begin(ctx.tid_);

  std::vector<bucket*> mine;  // participants frozen by this call, freeze order
  merge_status verdict = merge_status::merged;
  bool done = false;

  while (!done) {
    directory_state* d = dir_.load(std::memory_order_seq_cst);
    if (parent.length > d->depth) {
      verdict = merge_status::failed_stale;
      break;
    }
    bucket* covering = d->route(aligned_bits(parent.bits, parent.length));
    if (covering->depth() <= parent.length) {
      verdict = merge_status::failed_stale;
      break;
    }

    // Distinct buckets under the parent, ascending prefix order. All threads
    // freeze in this global order, so of two conflicting merges at most one
    // can lose a freeze race.
    std::vector<bucket*> parts;
    const std::size_t begin = d->range_begin(parent);
    const std::size_t count = d->range_size(parent);
    for (std::size_t i = 0; i < count; ++i) {
      bucket* b = d->entries()[begin + i];
      if (parts.empty() || parts.back() != b) parts.push_back(b);
    }

    bucket* next = nullptr;
    for (bucket* p : parts) {
      if (std::find(mine.begin(), mine.end(), p) == mine.end()) {
        next = p;
        break;
      }
    }

    if (next == nullptr) {
      // Phase 1 complete; counts are stable because every participant is
      // frozen.
      unsigned total = 0;
      for (bucket* p : mine) total += state_checked(p)->count;
      if (total > cfg_.bucket_capacity) {
        verdict = merge_status::failed_oversize;
        break;
      }
      const std::uint64_t merge_seq = ++ctx.seqnum_;
      announce(ctx, {op_kind::merge, aligned_bits(parent.bits, parent.length),
                     restructure_payload{parent, 0}.pack(), merge_seq});
      run_resize(ctx, nullptr);
      for (;;) {
        directory_state* d2 = dir_.load(std::memory_order_seq_cst);
        const bucket* at = d2->route(aligned_bits(parent.bits, parent.length));
        if (state_checked(at)->result_of(ctx.tid_).seqnum() >= merge_seq) break;
        run_resize(ctx, nullptr);
      }
      return merge_status::merged;
    }

    // Freeze `next` through the per-bucket update path.
    const op_record* rec =
        announce(ctx, {op_kind::freeze, aligned_bits(next->pfx.bits, next->pfx.length),
                       restructure_payload{parent, next->depth()}.pack(), ++ctx.seqnum_});
    const apply_result r = apply_update(ctx, next, *rec);
    if (r.code == apply_code::applied) {
      switch (r.status) {
        case op_status::frozen_done:
          mine.push_back(next);
          break;
        case op_status::already_frozen:
          verdict = merge_status::failed_conflict;
          done = true;
          break;
        case op_status::stale_target:
          verdict = merge_status::failed_stale;
          done = true;
          break;
        default:
          assert(false && "unexpected freeze outcome");
          done = true;
          verdict = merge_status::failed_stale;
          break;
      }
    } else if (r.code == apply_code::full) {
      verdict = merge_status::failed_full;
      done = true;
    }
    // moved: the directory changed; re-enumerate and retry
  }

  if (!mine.empty()) {
    // Release what this call froze. Identity checks keep the release from
    // touching buckets frozen by competing merges.
    release_action act{std::move(mine)};
    for (;;) {
      run_resize(ctx, &act);
      bool clear = true;
      directory_state* d = dir_.load(std::memory_order_seq_cst);
      for (bucket* v : act.victims) {
        if (v->pfx.length > d->depth) continue;
        if (d->entries()[d->range_begin(v->pfx)] != v) continue;
        if (state_checked(v)->frozen) {
          clear = false;
          break;
        }
      }
      if (clear) break;
    }
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// Introspection
// ---------------------------------------------------------------------------

unsigned hash_table::depth() const noexcept {
  return dir_.load(std::memory_order_acquire)->depth;
}

table_stats hash_table::stats() const noexcept {
  table_stats s;
  s.directory_publishes = directory_publishes_.load(std::memory_order_relaxed);
  s.bucket_splits = split_count_.load(std::memory_order_relaxed);
  s.merges = merge_count_.load(std::memory_order_relaxed);
  s.poison_violations = poison_violations_.load(std::memory_order_relaxed);
  s.depth = depth();
  return s;
}

std::uint64_t hash_table::applied_seqnum(unsigned tid, key_type key) const noexcept {
  const directory_state* d = dir_.load(std::memory_order_seq_cst);
  const bucket* b = d->route(apply_hash(cfg_.hash, key));
  return b->state.load(std::memory_order_seq_cst)->result_of(tid).seqnum();
}

std::vector<hash_table::bucket_dump> hash_table::audit_buckets() const {
  std::vector<bucket_dump> out;
  const directory_state* d = dir_.load(std::memory_order_acquire);
  const bucket* prev = nullptr;
  for (std::size_t i = 0; i < d->size(); ++i) {
    const bucket* b = d->entries()[i];
    if (b == prev) continue;
    prev = b;
    const bucket_state* s = b->state.load(std::memory_order_acquire);
    bucket_dump dump;
    dump.pfx = b->pfx;
    dump.frozen = s->frozen != 0;
    dump.items.assign(s->items(), s->items() + s->count);
    out.push_back(std::move(dump));
  }
  return out;
}

bool hash_table::validate(std::string* why) const {
  const auto fail = [&](const std::string& reason) {
    if (why != nullptr) *why = reason;
    return false;
  };

  const directory_state* d = dir_.load(std::memory_order_acquire);
  if (d->depth == 0 || d->depth > cfg_.max_depth) return fail("directory depth out of range");

  std::size_t i = 0;
  while (i < d->size()) {
    const bucket* b = d->entries()[i];
    if (b == nullptr) return fail("null directory entry");
    if (b->pfx.length > d->depth) return fail("bucket deeper than directory");

    const std::size_t span = d->range_size(b->pfx);
    if (i % span != 0) return fail("bucket range misaligned at entry " + std::to_string(i));
    if (top_bits(i << (kKeyBits - d->depth), b->pfx.length) != b->pfx.bits) {
      return fail("entry index does not match bucket prefix " + b->pfx.to_string());
    }
    for (std::size_t k = 0; k < span; ++k) {
      if (d->entries()[i + k] != b) return fail("bucket range not contiguous");
    }

    const bucket_state* s = b->state.load(std::memory_order_acquire);
    if (s->threads != cfg_.threads || s->capacity != cfg_.bucket_capacity) {
      return fail("state header mismatch");
    }
    if (s->count > s->capacity) return fail("bucket overflow");
    for (unsigned a = 0; a < s->count; ++a) {
      if (!b->pfx.covers(apply_hash(cfg_.hash, s->items()[a].key))) {
        return fail("item routed to wrong bucket " + b->pfx.to_string());
      }
      for (unsigned c = a + 1; c < s->count; ++c) {
        if (s->items()[a].key == s->items()[c].key) return fail("duplicate key in bucket");
      }
    }
    i += span;
  }
  return true;
}

}  // namespace wfext
