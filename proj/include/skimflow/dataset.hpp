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

#ifndef SKIMFLOW_DATASET_HPP_
#define SKIMFLOW_DATASET_HPP_

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skimflow/error.hpp"
#include "skimflow/event.hpp"
#include "skimflow/partition.hpp"

namespace skimflow {

enum class DatasetKind { Data, Mc };

std::string_view dataset_kind_name(DatasetKind kind);

struct DatasetDescriptor {
  std::string glob;
  DatasetKind kind = DatasetKind::Mc;
  std::optional<double> cross_section_pb;  // mc only, > 0
  std::string label;

  /// Throws ConfigError when the cross-section rule is broken.
  void validate() const;
};

/// Sorted list of paths matching a glob pattern. Errors: NoFilesMatched.
std::vector<std::string> expand_glob(const std::string &pattern);

struct Warning {
  Errc code;
  std::string message;
};

using EventBlock = std::shared_ptr<const std::vector<Event>>;

/**
 * A glob-backed set of EVT files split into partitions, with an optional
 * in-memory cache of decoded events. After persist(), the next full
 * traversal retains each partition's events; later traversals are served
 * from memory and read nothing from storage.
 */
class PartitionedDataset {
 public:
  static constexpr std::uint64_t kUnlimitedCache = std::numeric_limits<std::uint64_t>::max();

  /// Errors: NoFilesMatched, UnreadableFile, storage header errors,
  /// InvalidCustomPlan.
  static PartitionedDataset open(DatasetDescriptor descriptor, const PartitionConfig &partitioning = {},
                                 std::uint64_t cache_budget_bytes = kUnlimitedCache);

  const DatasetDescriptor &descriptor() const { return descriptor_; }
  const std::vector<FileBlocks> &files() const { return files_; }
  const std::vector<Partition> &partitions() const { return partitions_; }
  std::uint64_t total_events() const;
  std::uint64_t stored_bytes() const;

  enum class CacheState { Cold, Cached };

  void persist() { persist_requested_ = true; }
  void unpersist();
  bool persist_requested() const { return persist_requested_; }
  CacheState cache_state() const;
  std::uint64_t cache_budget_bytes() const { return cache_budget_; }
  std::uint64_t cached_bytes() const { return cached_bytes_; }

  const std::vector<Warning> &warnings() const { return warnings_; }

  // Used by the traversal driver.
  const EventBlock &cached(std::size_t partition) const { return cache_[partition]; }
  void store(std::size_t partition, EventBlock events) { cache_[partition] = std::move(events); }
  void set_cached_bytes(std::uint64_t bytes) { cached_bytes_ = bytes; }
  void drop_cache_with_warning(const std::string &message);

 private:
  PartitionedDataset() = default;

  DatasetDescriptor descriptor_;
  std::vector<FileBlocks> files_;
  std::vector<Partition> partitions_;
  std::vector<EventBlock> cache_;
  std::uint64_t cache_budget_ = kUnlimitedCache;
  std::uint64_t cached_bytes_ = 0;
  bool persist_requested_ = false;
  std::vector<Warning> warnings_;
};

}  // namespace skimflow

#endif  // SKIMFLOW_DATASET_HPP_
