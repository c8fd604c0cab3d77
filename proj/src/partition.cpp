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

#include "skimflow/partition.hpp"

#include <algorithm>
#include <filesystem>

#include "skimflow/error.hpp"

namespace skimflow {

PartitionConfig PartitionConfig::automatic(std::uint64_t target_bytes) {
  PartitionConfig c;
  c.mode = Mode::Auto;
  c.target_bytes = target_bytes;
  return c;
}

PartitionConfig PartitionConfig::explicit_ranges(std::vector<CustomRange> ranges) {
  PartitionConfig c;
  c.mode = Mode::Custom;
  c.custom = std::move(ranges);
  return c;
}

PartitionConfig PartitionConfig::split_per_file(std::size_t parts) {
  PartitionConfig c;
  c.mode = Mode::Custom;
  c.per_file = parts;
  return c;
}

namespace {

Partition make_partition(const std::vector<FileBlocks> &files, std::size_t file, std::size_t begin,
                         std::size_t end) {
  Partition p{file, begin, end, 0, 0};
  for (std::size_t b = begin; b < end; ++b) {
    p.events += files[file].blocks[b].event_count;
    p.stored_bytes += files[file].blocks[b].stored_bytes();
  }
  return p;
}

std::vector<Partition> plan_auto(const std::vector<FileBlocks> &files, std::uint64_t target) {
  std::vector<Partition> out;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto &blocks = files[f].blocks;
    std::size_t begin = 0;
    std::uint64_t acc = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto size = blocks[b].stored_bytes();
      if (b > begin && acc + size > target) {
        out.push_back(make_partition(files, f, begin, b));
        begin = b;
        acc = 0;
      }
      acc += size;
    }
    if (begin < blocks.size()) out.push_back(make_partition(files, f, begin, blocks.size()));
  }
  return out;
}

std::vector<Partition> plan_even_split(const std::vector<FileBlocks> &files, std::size_t parts) {
  if (parts == 0) throw Error(Errc::InvalidCustomPlan, "per_file must be at least 1");
  std::vector<Partition> out;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const std::size_t n = files[f].blocks.size();
    const std::size_t k = std::min(parts, n);
    for (std::size_t i = 0; i < k; ++i) {
      out.push_back(make_partition(files, f, n * i / k, n * (i + 1) / k));
    }
  }
  return out;
}

std::size_t find_file(const std::vector<FileBlocks> &files, const std::string &name) {
  for (std::size_t f = 0; f < files.size(); ++f) {
    if (files[f].path == name || std::filesystem::path(files[f].path).filename() == name) return f;
  }
  throw Error(Errc::InvalidCustomPlan, "custom range names unknown file '" + name + "'");
}

std::vector<Partition> plan_custom(const std::vector<FileBlocks> &files, const std::vector<CustomRange> &ranges) {
  std::vector<Partition> out;
  for (const auto &r : ranges) {
    const std::size_t f = find_file(files, r.file);
    if (r.begin >= r.end || r.end > files[f].blocks.size()) {
      throw Error(Errc::InvalidCustomPlan, "range [" + std::to_string(r.begin) + ", " + std::to_string(r.end) +
                                               ") is empty or exceeds the " +
                                               std::to_string(files[f].blocks.size()) + " blocks of '" +
                                               files[f].path + "'");
    }
    out.push_back(make_partition(files, f, r.begin, r.end));
  }
  std::sort(out.begin(), out.end(), [](const Partition &a, const Partition &b) {
    return a.file_index != b.file_index ? a.file_index < b.file_index : a.first_block < b.first_block;
  });
  // Coverage: per file, ranges must tile [0, blocks) without gaps or overlap.
  std::size_t i = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    std::size_t next = 0;
    for (; i < out.size() && out[i].file_index == f; ++i) {
      if (out[i].first_block != next) {
        throw Error(Errc::InvalidCustomPlan, std::string(out[i].first_block < next ? "overlap" : "gap") +
                                                 " at block " + std::to_string(std::min(next, out[i].first_block)) +
                                                 " of '" + files[f].path + "'");
      }
      next = out[i].end_block;
    }
    if (next != files[f].blocks.size()) {
      throw Error(Errc::InvalidCustomPlan, "gap at block " + std::to_string(next) + " of '" + files[f].path + "'");
    }
  }
  return out;
}

}  // namespace

std::vector<Partition> plan_partitions(const std::vector<FileBlocks> &files, const PartitionConfig &config) {
  if (files.empty()) throw Error(Errc::NoFilesMatched, "no files to partition");
  if (config.mode == PartitionConfig::Mode::Auto) {
    if (config.target_bytes == 0) throw Error(Errc::ConfigError, "partition.target_bytes must be positive");
    return plan_auto(files, config.target_bytes);
  }
  if (config.per_file) return plan_even_split(files, *config.per_file);
  return plan_custom(files, config.custom);
}

}  // namespace skimflow
