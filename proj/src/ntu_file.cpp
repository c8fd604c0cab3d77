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

#include "skimflow/ntu_file.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <limits>
#include <set>

#include <json.hpp>

#include "byte_io.hpp"
#include "skimflow/error.hpp"

namespace skimflow {

namespace {

constexpr char kMagic[4] = {'N', 'T', 'U', '1'};
constexpr std::uint32_t kMaxHeaderBytes = 1u << 24;
constexpr std::uint64_t kFooterBytes = 12;

using detail::get_le;
using detail::put_le;

std::unique_ptr<std::FILE, int (*)(std::FILE *)> open_file(const std::string &path, const char *mode) {
  return {std::fopen(path.c_str(), mode), &std::fclose};
}

std::string header_json(const FlatSchema &columns) {
  auto cols = nlohmann::ordered_json::array();
  for (const auto &c : columns) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["type"] = std::string(primitive_name(c.kind));
    cols.push_back(std::move(j));
  }
  nlohmann::ordered_json root;
  root["columns"] = std::move(cols);
  return root.dump();
}

FlatSchema parse_header(const std::string &text, const std::string &path) {
  FlatSchema out;
  try {
    auto j = nlohmann::ordered_json::parse(text);
    for (const auto &c : j.at("columns")) {
      auto kind = parse_primitive(c.at("type").get<std::string>());
      if (!kind) throw Error(Errc::CorruptHeader, "'" + path + "' has an unknown column type");
      out.push_back({c.at("name").get<std::string>(), *kind});
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error(Errc::CorruptHeader, "'" + path + "' header: " + e.what());
  }
  return out;
}

std::uint64_t row_width(const FlatSchema &columns) {
  std::uint64_t w = 0;
  for (const auto &c : columns) w += primitive_width(c.kind);
  return w;
}

void append_column_bytes(std::vector<std::uint8_t> &buf, const ColumnData &col) {
  std::visit(
      [&buf](const auto &values) {
        using T = typename std::decay_t<decltype(values)>::value_type;
        buf.reserve(buf.size() + values.size() * sizeof(T));
        for (const T v : values) put_le(buf, v);
      },
      col);
}

template <typename T>
void decode_into(std::vector<T> &dst, const std::uint8_t *src, std::size_t n) {
  const std::size_t base = dst.size();
  dst.resize(base + n);
  for (std::size_t i = 0; i < n; ++i) dst[base + i] = get_le<T>(src + i * sizeof(T));
}

void decode_column_bytes(ColumnData &col, const std::uint8_t *src, std::size_t n) {
  std::visit([&](auto &values) { decode_into(values, src, n); }, col);
}

}  // namespace

// ---------------------------------------------------------------------------
// Writer
// ---------------------------------------------------------------------------

NtuWriter::NtuWriter(std::string path, FlatSchema columns, std::size_t group_rows)
    : path_(std::move(path)),
      columns_(std::move(columns)),
      group_rows_(group_rows),
      file_(nullptr, &std::fclose),
      pending_(columns_) {
  if (group_rows_ == 0 || group_rows_ > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::ConfigError, "group_rows must be in [1, 2^32)");
  }
  std::set<std::string_view> names;
  for (const auto &c : columns_) {
    if (c.name.empty() || !names.insert(c.name).second) {
      throw Error(Errc::NameCollision, "column name '" + c.name + "' is empty or repeated");
    }
  }
  file_ = open_file(path_, "wb");
  if (!file_) throw Error(Errc::IoFailure, "cannot open '" + path_ + "' for writing");
  // Allocate and touch the group buffers up front so flushing a group costs
  // the same whatever else the process holds in memory.
  const std::size_t prefill = std::min(group_rows_, kDefaultGroupRows);
  std::size_t row_bytes = 0;
  for (auto &col : pending_.columns) {
    std::visit(
        [&](auto &v) {
          v.resize(prefill);
          v.clear();
          row_bytes += sizeof(typename std::decay_t<decltype(v)>::value_type);
        },
        col);
  }
  buffer_.resize(4 + prefill * row_bytes);
  buffer_.clear();
  const std::string header = header_json(columns_);
  std::vector<std::uint8_t> head(kMagic, kMagic + 4);
  put_le(head, static_cast<std::uint32_t>(header.size()));
  head.insert(head.end(), header.begin(), header.end());
  detail::write_all(file_.get(), head.data(), head.size(), path_);
}

NtuWriter::~NtuWriter() {
  if (!finished_) {
    file_.reset();
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

void NtuWriter::append(const NtupleRow &row) {
  pending_.append_row(row);
  if (pending_.rows() >= group_rows_) flush_group();
}

void NtuWriter::append(const ColumnBatch &batch) {
  if (!(batch.schema == columns_)) {
    throw Error(Errc::ArityMismatch, "batch columns do not match the ntuple header");
  }
  const std::size_t n = batch.rows();
  std::size_t start = 0;
  while (start < n) {
    const std::size_t take = std::min(n - start, group_rows_ - pending_.rows());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      std::visit(
          [&](auto &dst) {
            const auto &src = std::get<std::remove_reference_t<decltype(dst)>>(batch.columns[c]);
            dst.insert(dst.end(), src.begin() + static_cast<std::ptrdiff_t>(start),
                       src.begin() + static_cast<std::ptrdiff_t>(start + take));
          },
          pending_.columns[c]);
    }
    start += take;
    if (pending_.rows() >= group_rows_) flush_group();
  }
}

void NtuWriter::flush_group() {
  const std::size_t n = pending_.rows();
  if (n == 0) return;
  buffer_.clear();
  put_le(buffer_, static_cast<std::uint32_t>(n));
  for (const auto &col : pending_.columns) append_column_bytes(buffer_, col);
  detail::write_all(file_.get(), buffer_.data(), buffer_.size(), path_);
  total_rows_ += n;
  ++groups_;
  // Keep the column capacity for the next group.
  for (auto &col : pending_.columns) std::visit([](auto &v) { v.clear(); }, col);
}

std::uint64_t NtuWriter::finish() {
  if (finished_) return total_rows_;
  flush_group();
  std::vector<std::uint8_t> footer;
  put_le(footer, total_rows_);
  put_le(footer, groups_);
  detail::write_all(file_.get(), footer.data(), footer.size(), path_);
  if (std::fflush(file_.get()) != 0) throw Error(Errc::IoFailure, "flush failed for '" + path_ + "'");
  std::FILE *f = file_.release();
  if (std::fclose(f) != 0) throw Error(Errc::IoFailure, "close failed for '" + path_ + "'");
  finished_ = true;
  return total_rows_;
}

void write_ntu(const std::string &path, const ColumnBatch &rows, std::size_t group_rows) {
  NtuWriter writer(path, rows.schema, group_rows);
  writer.append(rows);
  writer.finish();
}

void write_ntu(const std::string &path, const FlatSchema &columns, const std::vector<NtupleRow> &rows,
               std::size_t group_rows) {
  NtuWriter writer(path, columns, group_rows);
  for (const auto &r : rows) writer.append(r);
  writer.finish();
}

// ---------------------------------------------------------------------------
// Reader
// ---------------------------------------------------------------------------

NtuReader::NtuReader(std::string path) : path_(std::move(path)), file_(open_file(path_, "rb")) {
  if (!file_) throw Error(Errc::UnreadableFile, "cannot open '" + path_ + "' for reading");
  file_size_ = detail::file_size(file_.get(), path_);
  std::uint8_t head[8];
  const std::size_t got = detail::read_some(file_.get(), head, 8);
  counters_.storage_bytes += got;
  if (got < 4 || std::memcmp(head, kMagic, 4) != 0) {
    throw Error(Errc::BadMagic, "'" + path_ + "' is not an NTU1 file");
  }
  if (got < 8) throw Error(Errc::CorruptHeader, "'" + path_ + "' ends inside the header length");
  const auto header_len = get_le<std::uint32_t>(head + 4);
  if (header_len > kMaxHeaderBytes || 8 + header_len + kFooterBytes > file_size_) {
    throw Error(Errc::CorruptHeader, "'" + path_ + "' declares an impossible header length");
  }
  std::string header(header_len, '\0');
  if (detail::read_some(file_.get(), header.data(), header_len) != header_len) {
    throw Error(Errc::CorruptHeader, "'" + path_ + "' ends inside the header");
  }
  counters_.storage_bytes += header_len;
  columns_ = parse_header(header, path_);

  detail::seek_to(file_.get(), file_size_ - kFooterBytes, path_);
  std::uint8_t footer[kFooterBytes];
  if (detail::read_some(file_.get(), footer, kFooterBytes) != kFooterBytes) {
    throw Error(Errc::FooterMismatch, "'" + path_ + "' footer is unreadable");
  }
  counters_.storage_bytes += kFooterBytes;
  total_rows_ = get_le<std::uint64_t>(footer);
  const auto group_count = get_le<std::uint32_t>(footer + 8);

  const std::uint64_t width = row_width(columns_);
  const std::uint64_t data_end = file_size_ - kFooterBytes;
  std::uint64_t pos = 8 + header_len;
  std::uint64_t rows_seen = 0;
  for (std::uint32_t g = 0; g < group_count; ++g) {
    if (data_end - pos < 4 || pos > data_end) {
      throw Error(Errc::FooterMismatch, "'" + path_ + "' has fewer groups than its footer declares");
    }
    detail::seek_to(file_.get(), pos, path_);
    std::uint8_t rc[4];
    detail::read_some(file_.get(), rc, 4);
    counters_.storage_bytes += 4;
    const auto rows = get_le<std::uint32_t>(rc);
    groups_.push_back({pos + 4, rows});
    pos += 4 + rows * width;
    rows_seen += rows;
    if (pos > data_end) {
      throw Error(Errc::FooterMismatch, "'" + path_ + "' group " + std::to_string(g) + " overruns the footer");
    }
  }
  if (pos != data_end || rows_seen != total_rows_) {
    throw Error(Errc::FooterMismatch, "'" + path_ + "' footer disagrees with its row groups");
  }
}

ColumnBatch NtuReader::read(const std::vector<std::string> &names) {
  FlatSchema selected;
  std::vector<std::uint64_t> offsets;  // byte offset of each column per row
  for (const auto &name : names) {
    std::uint64_t off = 0;
    bool found = false;
    for (const auto &c : columns_) {
      if (c.name == name) {
        selected.push_back(c);
        offsets.push_back(off);
        found = true;
        break;
      }
      off += primitive_width(c.kind);
    }
    if (!found) throw Error(Errc::UnknownColumn, "'" + path_ + "' has no column '" + name + "'");
  }
  ColumnBatch out(selected);
  std::vector<std::uint8_t> buf;
  for (const auto &g : groups_) {
    for (std::size_t i = 0; i < selected.size(); ++i) {
      const std::uint64_t width = primitive_width(selected[i].kind);
      const std::uint64_t bytes = width * g.rows;
      buf.resize(bytes);
      detail::seek_to(file_.get(), g.offset + offsets[i] * g.rows, path_);
      if (detail::read_some(file_.get(), buf.data(), bytes) != bytes) {
        throw Error(Errc::FooterMismatch, "'" + path_ + "' column data is truncated");
      }
      counters_.storage_bytes += bytes;
      decode_column_bytes(out.columns[i], buf.data(), g.rows);
    }
  }
  return out;
}

ColumnBatch NtuReader::read_all() {
  std::vector<std::string> names;
  for (const auto &c : columns_) names.push_back(c.name);
  return read(names);
}

ColumnBatch read_ntu(const std::string &path, const std::vector<std::string> &names) {
  return NtuReader(path).read(names);
}

// ---------------------------------------------------------------------------
// Flattening
// ---------------------------------------------------------------------------

namespace {

void flatten_node(const SchemaNode &node, const std::string &name, const std::string &path,
                  const FlattenRules &rules, FlatSchema &out, std::vector<std::string> &paths) {
  if (node.is_array()) return;
  if (node.is_primitive()) {
    out.push_back({name, node.primitive_kind()});
    paths.push_back(path);
    return;
  }
  for (std::size_t i = 0; i < node.field_count(); ++i) {
    const auto &child = node.field_name(i);
    flatten_node(node.field(i), name.empty() ? child : name + rules.separator + child,
                 path.empty() ? child : path + "." + child, rules, out, paths);
  }
}

}  // namespace

FlatSchema flatten_schema(const Schema &schema, const FlattenRules &rules) {
  FlatSchema out;
  std::vector<std::string> paths;
  flatten_node(schema.root(), "", "", rules, out, paths);
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!seen.insert(out[i].name).second) {
      throw Error(Errc::NameCollision, "path '" + paths[i] + "' flattens to existing column '" + out[i].name + "'");
    }
  }
  return out;
}

std::vector<std::string> flatten_paths(const Schema &schema) {
  FlatSchema cols;
  std::vector<std::string> paths;
  flatten_node(schema.root(), "", "", FlattenRules{}, cols, paths);
  return paths;
}

}  // namespace skimflow
