# Copyright 2026 The wfext Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Smoke tests for the Python bindings."""

import wfext


def test_basic_dictionary_semantics():
    t = wfext.Table(threads=2, bucket_capacity=8)
    assert t.lookup(1) is None
    assert t.insert(1, 100) == "inserted"
    assert t.insert(1, 200) == "updated"
    assert t.lookup(1) == 200
    assert t.erase(1) == "removed"
    assert t.erase(1) == "absent"
    assert t.validate()


def test_splits_follow_the_bit_string_layout():
    t = wfext.Table(threads=1, bucket_capacity=2, initial_depth=2, hash="identity")
    for bits in ("0001", "0100", "1001", "1100", "0010"):
        assert t.insert(wfext.key_bits(bits), 7) == "inserted"
    assert t.depth() == 2
    by_prefix = {b["prefix"]: sorted(k for k, _ in b["items"]) for b in t.buckets()}
    assert by_prefix["00"] == sorted([wfext.key_bits("0001"), wfext.key_bits("0010")])
    assert by_prefix["01"] == [wfext.key_bits("0100")]
    assert t.validate()


def test_merge_roundtrip():
    t = wfext.Table(threads=2, bucket_capacity=2, initial_depth=1, hash="identity")
    for bits in ("0001", "0100", "0010"):
        t.insert(wfext.key_bits(bits), 1)
    assert t.depth() == 2
    assert t.erase(wfext.key_bits("0010")) == "removed"
    assert t.request_merge(0b0, 1) == "merged"
    assert t.lookup(wfext.key_bits("0001")) == 1
    assert t.validate()


def test_throughput_runner_reports():
    rep = wfext.run_throughput(threads=2, duration=0.1, keys=128, lookup_pct=80,
                               insert_pct=10, delete_pct=10, prefill=0.5)
    assert rep["ops_total"] > 0
    assert rep["audit_ok"]
    assert rep["ops_total"] == rep["lookups"] + rep["inserts"] + rep["deletes"]

    lock = wfext.run_throughput(algo="lock", threads=2, duration=0.1, keys=128,
                                lookup_pct=80, insert_pct=10, delete_pct=10)
    assert lock["ops_total"] > 0


def test_resize_runner_settles():
    rep = wfext.run_resize_benchmark(threads=2, keys=2048, bucket_capacity=8)
    assert rep["inserted"] == 2048
    assert rep["audit_ok"] and rep["depth_stable"]
    assert rep["final_depth"] >= 8


def test_lincheck_passes_on_small_histories():
    rep = wfext.run_lincheck(trials=50, threads=3, ops_per_thread=4)
    assert rep["linearizable"], rep.get("counterexample", "")


def test_locked_table_baseline():
    t = wfext.LockedTable(depth=4)
    assert t.bucket_count() == 16
    assert t.insert(5, 50) == "inserted"
    assert t.lookup(5) == 50
    assert t.erase(5) == "removed"


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"{name}: ok")
    print("smoke tests passed")
