/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "skimflow/engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "skimflow/kahan.hpp"

namespace skimflow {

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

namespace {

std::uint64_t footprint(const std::vector<Event> &events) {
  std::uint64_t bytes = sizeof(std::vector<Event>) + events.capacity() * sizeof(Event);
  for (const auto &e : events) bytes += e.memory_footprint() - sizeof(Event);
  return bytes;
}

std::string describe(const PartitionedDataset &ds, std::size_t p) {
  const auto &part = ds.partitions()[p];
  return "partition " + std::to_string(p) + " ('" + ds.files()[part.file_index].path + "' blocks " +
         std::to_string(part.first_block) + "-" + std::to_string(part.end_block) + ")";
}

struct WorkerState {
  std::map<std::size_t, std::unique_ptr<EvtReader>> readers;
  PhaseClock clock;
  IoCounters io;
  std::uint64_t events = 0;
  std::uint64_t cache_hits = 0;
};

class Traversal {
 public:
  Traversal(PartitionedDataset &ds, const BlockVisitor &visit) : ds_(ds), visit_(visit) {}

  void run_partition(std::size_t p, WorkerState &w) {
    if (const auto &hit = ds_.cached(p)) {
      w.clock.switch_to(Phase::Compute);
      visit_(p, *hit);
      w.events += hit->size();
      ++w.cache_hits;
      return;
    }
    const Partition &part = ds_.partitions()[p];
    auto &reader = w.readers[part.file_index];
    w.clock.switch_to(Phase::Read);
    if (!reader) {
      reader = std::make_unique<EvtReader>(ds_.files()[part.file_index].path);
      // File open and header reads count as storage traffic.
      w.io.storage_bytes += reader->counters().storage_bytes;
    }
    const bool keep = ds_.persist_requested() && !budget_exceeded_.load(std::memory_order_relaxed);
    std::vector<Event> retained;
    std::vector<Event> scratch;
    RawBlock raw;
    for (std::size_t b = part.first_block; b < part.end_block; ++b) {
      w.clock.switch_to(Phase::Read);
      const auto before = reader->counters();
      reader->read_raw(b, raw);
      w.clock.switch_to(Phase::Decode);
      std::vector<Event> &dst = keep ? retained : scratch;
      if (!keep) dst.clear();
      const std::size_t base = dst.size();
      reader->decode(raw, dst);
      const auto after = reader->counters();
      w.io.storage_bytes += after.storage_bytes - before.storage_bytes;
      w.io.decoded_bytes += after.decoded_bytes - before.decoded_bytes;
      w.clock.switch_to(Phase::Compute);
      visit_(p, std::span<const Event>(dst).subspan(base));
      w.events += dst.size() - base;
    }
    if (keep) {
      const std::uint64_t bytes = footprint(retained);
      const std::uint64_t total = cache_bytes_.fetch_add(bytes) + bytes;
      if (total > ds_.cache_budget_bytes()) {
        budget_exceeded_.store(true);
      } else {
        ds_.store(p, std::make_shared<const std::vector<Event>>(std::move(retained)));
      }
    }
  }

  void fail(std::size_t p, std::exception_ptr e) {
    std::lock_guard lock(error_mutex_);
    if (!error_ || p < error_partition_) {
      error_ = e;
      error_partition_ = p;
    }
    abort_.store(true);
  }

  void work(WorkerState &w) {
    w.clock.start(Phase::Compute);
    while (!abort_.load(std::memory_order_relaxed)) {
      const std::size_t p = next_.fetch_add(1);
      if (p >= ds_.partitions().size()) break;
      try {
        run_partition(p, w);
      } catch (...) {
        fail(p, std::current_exception());
      }
    }
    w.clock.stop();
  }

  void finish() {
    if (error_) {
      try {
        std::rethrow_exception(error_);
      } catch (const Error &e) {
        throw Error(e.code(), describe(ds_, error_partition_) + ": " + e.message());
      }
    }
    if (budget_exceeded_.load()) {
      ds_.drop_cache_with_warning("cache budget of " + std::to_string(ds_.cache_budget_bytes()) +
                                  " bytes exceeded; dataset stays uncached");
    } else if (ds_.persist_requested()) {
      ds_.set_cached_bytes(std::max<std::uint64_t>(ds_.cached_bytes(), cache_bytes_.load()));
    }
  }

 private:
  PartitionedDataset &ds_;
  const BlockVisitor &visit_;
  std::atomic<std::size_t> next_{0};
  std::atomic<bool> abort_{false};
  std::atomic<bool> budget_exceeded_{false};
  std::atomic<std::uint64_t> cache_bytes_{0};
  std::mutex error_mutex_;
  std::exception_ptr error_;
  std::size_t error_partition_ = 0;
};

}  // namespace

TraversalStats traverse(PartitionedDataset &dataset, const EngineConfig &config, const BlockVisitor &visit) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t parts = dataset.partitions().size();
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, std::max<std::size_t>(parts, 1)));
  Traversal traversal(dataset, visit);
  std::vector<WorkerState> states(workers);
  if (workers == 1) {
    traversal.work(states[0]);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) {
      threads.emplace_back([&traversal, &states, i] { traversal.work(states[i]); });
    }
  }
  traversal.finish();
  TraversalStats stats;
  for (const auto &w : states) {
    stats.io += w.io;
    stats.phases += w.clock.times();
    stats.events += w.events;
    stats.cache_hits += w.cache_hits;
  }
  stats.partitions = parts;
  stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

Reducer Reducer::sum() {
  return {Kind::Sum, 0.0, [](double a, double b) { return a + b; }};
}

Reducer Reducer::max() {
  return {Kind::Max, -std::numeric_limits<double>::infinity(), [](double a, double b) { return std::max(a, b); }};
}

Reducer Reducer::min() {
  return {Kind::Min, std::numeric_limits<double>::infinity(), [](double a, double b) { return std::min(a, b); }};
}

Reducer Reducer::custom(double identity, std::function<double(double, double)> combine) {
  return {Kind::Custom, identity, std::move(combine)};
}

double tree_combine(std::vector<double> partials, const Reducer &reducer) {
  if (partials.empty()) return reducer.identity;
  while (partials.size() > 1) {
    std::vector<double> next;
    next.reserve((partials.size() + 1) / 2);
    for (std::size_t i = 0; i < partials.size(); i += 2) {
      next.push_back(i + 1 < partials.size() ? reducer.combine(partials[i], partials[i + 1]) : partials[i]);
    }
    partials = std::move(next);
  }
  return partials.front();
}

namespace {

KahanSum tree_combine_kahan(std::vector<KahanSum> partials) {
  if (partials.empty()) return {};
  while (partials.size() > 1) {
    std::vector<KahanSum> next;
    next.reserve((partials.size() + 1) / 2);
    for (std::size_t i = 0; i < partials.size(); i += 2) {
      KahanSum merged = partials[i];
      if (i + 1 < partials.size()) merged.merge(partials[i + 1]);
      next.push_back(merged);
    }
    partials = std::move(next);
  }
  return partials.front();
}

}  // namespace

double map_reduce(PartitionedDataset &dataset, const EngineConfig &config,
                  const std::function<double(const Event &)> &map, const Reducer &reducer, TraversalStats *stats) {
  const std::size_t parts = dataset.partitions().size();
  TraversalStats local;
  double result = reducer.identity;
  if (reducer.kind == Reducer::Kind::Sum) {
    std::vector<KahanSum> partials(parts);
    local = traverse(dataset, config, [&](std::size_t p, std::span<const Event> events) {
      KahanSum &acc = partials[p];
      for (const auto &e : events) acc.add(map(e));
    });
    result = parts == 0 ? 0.0 : tree_combine_kahan(std::move(partials)).value();
  } else {
    std::vector<double> partials(parts, reducer.identity);
    local = traverse(dataset, config, [&](std::size_t p, std::span<const Event> events) {
      double acc = partials[p];
      for (const auto &e : events) acc = reducer.combine(acc, map(e));
      partials[p] = acc;
    });
    result = tree_combine(std::move(partials), reducer);
  }
  if (stats != nullptr) *stats = local;
  return result;
}

std::uint64_t filter_map_write(PartitionedDataset &dataset, const EngineConfig &config, const TypedExpr &cut,
                               const TypedProjection &proj, const RowFinalizer &finalize, NtuWriter &sink,
                               TraversalStats *stats) {
  const auto start = std::chrono::steady_clock::now();
  const FlatSchema &out_schema = sink.columns();
  std::vector<ColumnBatch> batches(dataset.partitions().size(), ColumnBatch(out_schema));
  TraversalStats local = traverse(dataset, config, [&](std::size_t p, std::span<const Event> events) {
    ColumnBatch &batch = batches[p];
    NtupleRow row;
    for (const auto &e : events) {
      if (!cut.eval_bool(e)) continue;
      proj.eval_into(e, row);
      if (finalize) finalize(row);
      batch.append_row(row);
    }
  });
  PhaseClock clock;
  clock.start(Phase::Write);
  std::uint64_t rows = 0;
  for (const auto &batch : batches) {
    rows += batch.rows();
    sink.append(batch);
  }
  sink.finish();
  clock.stop();
  batches.clear();
  local.phases += clock.times();
  local.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (stats != nullptr) *stats = local;
  return rows;
}

}  // namespace skimflow
