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

#ifndef SKIMFLOW_NTU_FILE_HPP_
#define SKIMFLOW_NTU_FILE_HPP_

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "skimflow/evt_file.hpp"
#include "skimflow/scalar.hpp"

namespace skimflow {

/*
 * NTU columnar ntuple, all integers little-endian:
 *
 *   "NTU1"
 *   u32 header length, header bytes: {"columns":[{"name":..,"type":..},..]}
 *   row groups, each: u32 row count, then every column in header order as a
 *     contiguous array of its primitive (bool is one byte)
 *   footer: u64 total rows, u32 group count
 */

inline constexpr std::size_t kDefaultGroupRows = 65536;

class NtuWriter {
 public:
  /// Rejects empty or duplicate column names (NameCollision).
  NtuWriter(std::string path, FlatSchema columns, std::size_t group_rows = kDefaultGroupRows);
  /// Removes the partial file unless finish() succeeded.
  ~NtuWriter();
  NtuWriter(const NtuWriter &) = delete;
  NtuWriter &operator=(const NtuWriter &) = delete;

  /// Errors: ArityMismatch.
  void append(const NtupleRow &row);
  void append(const ColumnBatch &batch);

  /// Flushes the last group and writes the footer; returns total rows.
  std::uint64_t finish();

  const FlatSchema &columns() const { return columns_; }

 private:
  void flush_group();

  std::string path_;
  FlatSchema columns_;
  std::size_t group_rows_;
  std::unique_ptr<std::FILE, int (*)(std::FILE *)> file_;
  ColumnBatch pending_;
  std::vector<std::uint8_t> buffer_;
  std::uint64_t total_rows_ = 0;
  std::uint32_t groups_ = 0;
  bool finished_ = false;
};

void write_ntu(const std::string &path, const ColumnBatch &rows, std::size_t group_rows = kDefaultGroupRows);
void write_ntu(const std::string &path, const FlatSchema &columns, const std::vector<NtupleRow> &rows,
               std::size_t group_rows = kDefaultGroupRows);

class NtuReader {
 public:
  /// Reads header and footer and walks the group table. Errors:
  /// UnreadableFile, BadMagic, CorruptHeader, FooterMismatch.
  explicit NtuReader(std::string path);

  const FlatSchema &columns() const { return columns_; }
  std::uint64_t rows() const { return total_rows_; }
  std::size_t groups() const { return groups_.size(); }
  std::uint32_t group_rows(std::size_t g) const { return groups_.at(g).rows; }
  std::uint64_t file_bytes() const { return file_size_; }

  /// Reads only the requested columns, in request order. Errors: UnknownColumn.
  ColumnBatch read(const std::vector<std::string> &names);
  ColumnBatch read_all();

  const IoCounters &counters() const { return counters_; }

 private:
  struct Group {
    std::uint64_t offset;  // first column byte
    std::uint32_t rows;
  };

  std::string path_;
  std::unique_ptr<std::FILE, int (*)(std::FILE *)> file_;
  FlatSchema columns_;
  std::vector<Group> groups_;
  std::uint64_t total_rows_ = 0;
  std::uint64_t file_size_ = 0;
  IoCounters counters_;
};

ColumnBatch read_ntu(const std::string &path, const std::vector<std::string> &names);

struct FlattenRules {
  std::string separator = "_";
};

/// Nested record paths become separator-joined column names; arrays are
/// skipped. Errors: NameCollision.
FlatSchema flatten_schema(const Schema &schema, const FlattenRules &rules = {});

/// Dot paths matching each column of flatten_schema, in the same order.
std::vector<std::string> flatten_paths(const Schema &schema);

}  // namespace skimflow

#endif  // SKIMFLOW_NTU_FILE_HPP_
