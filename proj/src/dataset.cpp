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

#include "skimflow/dataset.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>

namespace skimflow {

std::string_view dataset_kind_name(DatasetKind kind) { return kind == DatasetKind::Mc ? "mc" : "data"; }

void DatasetDescriptor::validate() const {
  if (kind == DatasetKind::Mc) {
    if (!cross_section_pb || !(*cross_section_pb > 0.0) || !std::isfinite(*cross_section_pb)) {
      throw Error(Errc::ConfigError, "mc dataset '" + label + "' needs a positive finite xsec_pb");
    }
  } else if (cross_section_pb) {
    throw Error(Errc::ConfigError, "data dataset '" + label + "' must not carry xsec_pb");
  }
  if (glob.empty()) throw Error(Errc::ConfigError, "dataset '" + label + "' has an empty glob");
}

std::vector<std::string> expand_glob(const std::string &pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), GLOB_NOSORT, nullptr, &g);
  std::vector<std::string> paths;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (rc == GLOB_NOSPACE || rc == GLOB_ABORTED) {
    throw Error(Errc::UnreadableFile, "glob '" + pattern + "' could not be expanded");
  }
  if (paths.empty()) throw Error(Errc::NoFilesMatched, "glob '" + pattern + "' matched no files");
  std::sort(paths.begin(), paths.end());
  return paths;
}

PartitionedDataset PartitionedDataset::open(DatasetDescriptor descriptor, const PartitionConfig &partitioning,
                                            std::uint64_t cache_budget_bytes) {
  PartitionedDataset ds;
  for (const auto &path : expand_glob(descriptor.glob)) {
    EvtReader reader(path);
    ds.files_.push_back({path, reader.blocks()});
  }
  ds.partitions_ = plan_partitions(ds.files_, partitioning);
  ds.cache_.resize(ds.partitions_.size());
  ds.cache_budget_ = cache_budget_bytes;
  ds.descriptor_ = std::move(descriptor);
  return ds;
}

std::uint64_t PartitionedDataset::total_events() const {
  std::uint64_t n = 0;
  for (const auto &p : partitions_) n += p.events;
  return n;
}

std::uint64_t PartitionedDataset::stored_bytes() const {
  std::uint64_t n = 0;
  for (const auto &p : partitions_) n += p.stored_bytes;
  return n;
}

void PartitionedDataset::unpersist() {
  persist_requested_ = false;
  for (auto &slot : cache_) slot.reset();
  cached_bytes_ = 0;
}

PartitionedDataset::CacheState PartitionedDataset::cache_state() const {
  if (!persist_requested_) return CacheState::Cold;
  for (const auto &slot : cache_) {
    if (!slot) return CacheState::Cold;
  }
  return CacheState::Cached;
}

void PartitionedDataset::drop_cache_with_warning(const std::string &message) {
  unpersist();
  warnings_.push_back({Errc::CacheMemoryExceeded, message});
}

}  // namespace skimflow
