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

#ifndef SKIMFLOW_ENGINE_HPP_
#define SKIMFLOW_ENGINE_HPP_

#include <cstdint>
#include <functional>
#include <span>

#include "skimflow/dataset.hpp"
#include "skimflow/expr.hpp"
#include "skimflow/ntu_file.hpp"
#include "skimflow/phase.hpp"

namespace skimflow {

std::size_t default_workers();

struct EngineConfig {
  std::size_t workers = default_workers();
};

/// What one traversal did. Phase times are summed over workers; with a
/// single worker they partition the traversal's wall time.
struct TraversalStats {
  IoCounters io;
  PhaseTimes phases;
  std::uint64_t events = 0;
  std::uint64_t partitions = 0;
  std::uint64_t cache_hits = 0;  // partitions served from memory
  double wall_seconds = 0.0;
};

/// Called once per block, in order within a partition; different partitions
/// may run concurrently on different workers.
using BlockVisitor = std::function<void(std::size_t partition, std::span<const Event> events)>;

/**
 * Visits every event of every partition exactly once. Partitions are handed
 * to workers dynamically; errors are rethrown for the lowest failing
 * partition index, naming the partition.
 */
TraversalStats traverse(PartitionedDataset &dataset, const EngineConfig &config, const BlockVisitor &visit);

/// Associative, commutative combine with its identity.
struct Reducer {
  enum class Kind { Sum, Max, Min, Custom };
  Kind kind = Kind::Sum;
  double identity = 0.0;
  std::function<double(double, double)> combine;

  static Reducer sum();
  static Reducer max();
  static Reducer min();
  static Reducer custom(double identity, std::function<double(double, double)> combine);
};

/**
 * Maps every event to a double and reduces. Each partition folds its events
 * in order (Kahan-compensated for sums); partials are then merged pairwise
 * in ascending partition order, so the result depends only on the partition
 * plan, never on the worker count.
 */
double map_reduce(PartitionedDataset &dataset, const EngineConfig &config,
                  const std::function<double(const Event &)> &map, const Reducer &reducer,
                  TraversalStats *stats = nullptr);

/// Pairwise merge of per-partition partials in ascending index order.
double tree_combine(std::vector<double> partials, const Reducer &reducer);

using RowFinalizer = std::function<void(NtupleRow &)>;

/**
 * Filters with `cut`, projects with `proj`, applies `finalize` (may be empty)
 * and writes the rows to `sink` in partition order, then input order. The
 * sink is finished on success; on failure it is left unfinished so its
 * destructor removes the partial file.
 */
std::uint64_t filter_map_write(PartitionedDataset &dataset, const EngineConfig &config, const TypedExpr &cut,
                               const TypedProjection &proj, const RowFinalizer &finalize, NtuWriter &sink,
                               TraversalStats *stats = nullptr);

}  // namespace skimflow

#endif  // SKIMFLOW_ENGINE_HPP_
