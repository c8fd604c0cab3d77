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

#ifndef SKIMFLOW_PARTITION_HPP_
#define SKIMFLOW_PARTITION_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skimflow/evt_file.hpp"

namespace skimflow {

/// One EVT file with its block table.
struct FileBlocks {
  std::string path;
  std::vector<BlockInfo> blocks;
};

/// A contiguous block range [first_block, end_block) of one file.
struct Partition {
  std::size_t file_index = 0;
  std::size_t first_block = 0;
  std::size_t end_block = 0;
  std::uint64_t events = 0;
  std::uint64_t stored_bytes = 0;

  friend bool operator==(const Partition &, const Partition &) = default;
};

struct CustomRange {
  std::string file;  // full path or file name as matched by the glob
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct PartitionConfig {
  enum class Mode { Auto, Custom };

  Mode mode = Mode::Auto;
  std::uint64_t target_bytes = 8u << 20;
  /// Custom mode: explicit ranges, or an even split when per_file is set.
  std::vector<CustomRange> custom;
  std::optional<std::size_t> per_file;

  static PartitionConfig automatic(std::uint64_t target_bytes);
  static PartitionConfig explicit_ranges(std::vector<CustomRange> ranges);
  static PartitionConfig split_per_file(std::size_t parts);
};

/**
 * Builds the partition list, ordered by file (as given, expected sorted) and
 * then by block range.
 *
 * Auto mode walks each file's blocks, adding a block to the open partition
 * only while the running stored size stays within target_bytes; a block is
 * never split, and partitions never span files. Custom mode must cover
 * every block of every file exactly once (InvalidCustomPlan otherwise).
 */
std::vector<Partition> plan_partitions(const std::vector<FileBlocks> &files, const PartitionConfig &config);

}  // namespace skimflow

#endif  // SKIMFLOW_PARTITION_HPP_
