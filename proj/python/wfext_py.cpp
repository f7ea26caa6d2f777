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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <stdexcept>

#include "wfext/baseline.hpp"
#include "wfext/bench.hpp"
#include "wfext/lincheck.hpp"
#include "wfext/table.hpp"

namespace py = pybind11;
using namespace wfext;

namespace {

hash_kind parse_hash(const std::string& s) {
  if (s == "mix64") return hash_kind::mix64;
  if (s == "identity") return hash_kind::identity;
  throw std::invalid_argument("hash must be 'mix64' or 'identity'");
}

reclaim_mode parse_reclaim(const std::string& s) {
  if (s == "epoch") return reclaim_mode::epoch;
  if (s == "leak") return reclaim_mode::leak;
  throw std::invalid_argument("reclaim must be 'epoch' or 'leak'");
}

/// Python-facing table handle. CPython serializes calls through the GIL, so
/// one registered context covers all Python-side operations; the remaining
/// thread slots are for native worker threads.
class py_table {
 public:
  py_table(unsigned threads, unsigned bucket_capacity, unsigned initial_depth,
           unsigned max_depth, const std::string& hash, const std::string& reclaim) {
    table_config cfg;
    cfg.threads = threads;
    cfg.bucket_capacity = bucket_capacity;
    cfg.initial_depth = initial_depth;
    cfg.max_depth = max_depth;
    cfg.hash = parse_hash(hash);
    cfg.reclaim = parse_reclaim(reclaim);
    table_ = std::make_unique<hash_table>(cfg);
    auto ctx = table_->register_thread();
    if (!ctx) throw std::runtime_error("no free thread slot");
    ctx_ = std::make_unique<thread_context>(*ctx);
  }

  std::string insert(key_type key, value_type value) {
    return to_string(table_->insert(*ctx_, key, value));
  }
  std::string erase(key_type key) { return to_string(table_->erase(*ctx_, key)); }
  std::optional<value_type> lookup(key_type key) { return table_->lookup(*ctx_, key); }
  std::string request_merge(std::uint64_t prefix_bits, unsigned prefix_len) {
    switch (table_->request_merge(*ctx_, prefix{prefix_bits, prefix_len})) {
      case merge_status::merged: return "merged";
      case merge_status::failed_full: return "failed_full";
      case merge_status::failed_conflict: return "failed_conflict";
      case merge_status::failed_oversize: return "failed_oversize";
      case merge_status::failed_stale: return "failed_stale";
    }
    return "?";
  }

  [[nodiscard]] unsigned depth() const { return table_->depth(); }
  [[nodiscard]] bool validate() const { return table_->validate(); }

  [[nodiscard]] py::dict stats() const {
    const table_stats s = table_->stats();
    py::dict d;
    d["directory_publishes"] = s.directory_publishes;
    d["bucket_splits"] = s.bucket_splits;
    d["merges"] = s.merges;
    d["depth"] = s.depth;
    return d;
  }

  [[nodiscard]] py::list buckets() const {
    py::list out;
    for (const auto& b : table_->audit_buckets()) {
      py::dict d;
      d["prefix"] = b.pfx.to_string();
      d["frozen"] = b.frozen;
      py::list items;
      for (const item& it : b.items) items.append(py::make_tuple(it.key, it.value));
      d["items"] = items;
      out.append(d);
    }
    return out;
  }

 private:
  std::unique_ptr<hash_table> table_;
  std::unique_ptr<thread_context> ctx_;
};

bench::workload_config config_from_kwargs(const std::string& algo, unsigned threads,
                                          double duration, std::uint64_t keys,
                                          unsigned lookup_pct, unsigned insert_pct,
                                          unsigned delete_pct, double prefill,
                                          unsigned bucket_capacity, unsigned initial_depth,
                                          std::uint64_t seed, const std::string& reclaim) {
  bench::workload_config cfg;
  cfg.algo = algo;
  cfg.threads = threads;
  cfg.duration_seconds = duration;
  cfg.key_space = keys;
  cfg.lookup_pct = lookup_pct;
  cfg.insert_pct = insert_pct;
  cfg.delete_pct = delete_pct;
  cfg.prefill = prefill;
  cfg.bucket_capacity = bucket_capacity;
  cfg.initial_depth = initial_depth;
  cfg.seed = seed;
  cfg.reclaim = parse_reclaim(reclaim);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_wfext, m) {
  m.doc() = "Wait-free resizable extendible hash table with a lock-based "
            "baseline, workload drivers and a linearizability checker";

  py::class_<py_table>(m, "Table")
      .def(py::init<unsigned, unsigned, unsigned, unsigned, const std::string&,
                    const std::string&>(),
           py::arg("threads") = 4, py::arg("bucket_capacity") = 8,
           py::arg("initial_depth") = 1, py::arg("max_depth") = 32,
           py::arg("hash") = "mix64", py::arg("reclaim") = "epoch")
      .def("insert", &py_table::insert, py::arg("key"), py::arg("value"))
      .def("erase", &py_table::erase, py::arg("key"))
      .def("lookup", &py_table::lookup, py::arg("key"))
      .def("request_merge", &py_table::request_merge, py::arg("prefix_bits"),
           py::arg("prefix_len"))
      .def("validate", &py_table::validate)
      .def("depth", &py_table::depth)
      .def("stats", &py_table::stats)
      .def("buckets", &py_table::buckets);

  py::class_<locked_table>(m, "LockedTable")
      .def(py::init([](unsigned depth, const std::string& hash) {
             return std::make_unique<locked_table>(depth, parse_hash(hash));
           }),
           py::arg("depth") = 8, py::arg("hash") = "mix64")
      .def("insert",
           [](locked_table& t, key_type k, value_type v) { return to_string(t.insert(k, v)); })
      .def("erase", [](locked_table& t, key_type k) { return to_string(t.erase(k)); })
      .def("lookup", [](locked_table& t, key_type k) { return t.lookup(k); })
      .def("bucket_count", &locked_table::bucket_count);

  m.def(
      "run_throughput",
      [](const std::string& algo, unsigned threads, double duration, std::uint64_t keys,
         unsigned lookup_pct, unsigned insert_pct, unsigned delete_pct, double prefill,
         unsigned bucket_capacity, unsigned initial_depth, std::uint64_t seed,
         const std::string& reclaim) {
        const auto cfg =
            config_from_kwargs(algo, threads, duration, keys, lookup_pct, insert_pct,
                               delete_pct, prefill, bucket_capacity, initial_depth, seed,
                               reclaim);
        bench::throughput_report rep;
        {
          py::gil_scoped_release release;
          rep = bench::run_throughput(cfg);
        }
        py::dict d;
        d["ops_total"] = rep.ops_total;
        d["ops_per_second"] = rep.ops_per_second;
        d["elapsed_seconds"] = rep.elapsed_seconds;
        d["lookups"] = rep.lookups;
        d["inserts"] = rep.inserts;
        d["deletes"] = rep.deletes;
        d["resize_publishes"] = rep.resize_publishes;
        d["bucket_splits"] = rep.bucket_splits;
        d["final_depth"] = rep.final_depth;
        d["memory_high_water_kb"] = rep.memory_high_water_kb;
        d["audit_ok"] = rep.audit_ok;
        return d;
      },
      py::arg("algo") = "wfext", py::arg("threads") = 4, py::arg("duration") = 1.0,
      py::arg("keys") = 1024, py::arg("lookup_pct") = 90, py::arg("insert_pct") = 5,
      py::arg("delete_pct") = 5, py::arg("prefill") = 0.5, py::arg("bucket_capacity") = 8,
      py::arg("initial_depth") = 1, py::arg("seed") = 1, py::arg("reclaim") = "epoch");

  m.def(
      "run_resize_benchmark",
      [](unsigned threads, std::uint64_t keys, unsigned bucket_capacity, std::uint64_t seed) {
        bench::workload_config cfg;
        cfg.threads = threads;
        cfg.key_space = keys;
        cfg.bucket_capacity = bucket_capacity;
        cfg.initial_depth = 1;
        cfg.seed = seed;
        bench::resize_report rep;
        {
          py::gil_scoped_release release;
          rep = bench::run_resize_benchmark(cfg);
        }
        py::dict d;
        d["seconds_to_final"] = rep.seconds_to_final;
        d["final_depth"] = rep.final_depth;
        d["bucket_splits"] = rep.bucket_splits;
        d["inserted"] = rep.inserted;
        d["depth_stable"] = rep.depth_stable;
        d["audit_ok"] = rep.audit_ok;
        return d;
      },
      py::arg("threads") = 4, py::arg("keys") = 16384, py::arg("bucket_capacity") = 8,
      py::arg("seed") = 1);

  m.def(
      "run_lincheck",
      [](unsigned trials, unsigned threads, unsigned ops_per_thread, std::uint64_t key_space,
         unsigned bucket_capacity, std::uint64_t seed) {
        lincheck::config cfg;
        cfg.threads = threads;
        cfg.ops_per_thread = ops_per_thread;
        cfg.key_space = key_space;
        cfg.bucket_capacity = bucket_capacity;
        cfg.seed = seed;
        lincheck::trial_summary sum;
        {
          py::gil_scoped_release release;
          sum = lincheck::run_trials(cfg, trials);
        }
        py::dict d;
        d["trials"] = sum.trials;
        d["failures"] = sum.failures;
        d["first_failing_seed"] = sum.first_failing_seed;
        d["linearizable"] = sum.failures == 0;
        if (sum.failures > 0) d["counterexample"] = lincheck::describe(sum.first_failure);
        return d;
      },
      py::arg("trials") = 200, py::arg("threads") = 3, py::arg("ops_per_thread") = 4,
      py::arg("key_space") = 4, py::arg("bucket_capacity") = 2, py::arg("seed") = 1);

  m.def("key_bits", [](const std::string& bits) {
    std::uint64_t v = 0;
    unsigned len = 0;
    for (const char c : bits) {
      if (c != '0' && c != '1') throw std::invalid_argument("bit string expected");
      v = (v << 1) | static_cast<std::uint64_t>(c == '1');
      ++len;
    }
    return aligned_bits(v, len);
  });

  m.attr("__version__") = "0.1.0";
}
