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

#ifndef SKIMFLOW_EVT_FILE_HPP_
#define SKIMFLOW_EVT_FILE_HPP_

#include <cstdint>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "skimflow/event.hpp"
#include "skimflow/schema.hpp"

namespace skimflow {

/*
 * EVT row container, all integers little-endian:
 *
 *   "EVT1"
 *   u32 header length, header bytes (canonical schema JSON)
 *   u8 flags (bit 0: payloads are raw-deflate compressed)
 *   blocks until end of file, each:
 *     u32 event count, u32 payload length, payload, u32 CRC-32 of payload
 *
 * Events are encoded back-to-back in schema order; arrays carry a u32
 * element count.  The CRC covers the stored (possibly compressed) bytes.
 */

inline constexpr std::size_t kDefaultBlockEvents = 4096;

struct EvtWriteOptions {
  bool compress = false;
  std::size_t block_events = kDefaultBlockEvents;
};

/// Byte counters maintained by a reader handle.
struct IoCounters {
  std::uint64_t storage_bytes = 0;  // read from the file
  std::uint64_t decoded_bytes = 0;  // event payload after decompression

  IoCounters &operator+=(const IoCounters &o) {
    storage_bytes += o.storage_bytes;
    decoded_bytes += o.decoded_bytes;
    return *this;
  }
};

struct BlockInfo {
  std::uint64_t offset = 0;  // of the block's event-count word
  std::uint32_t event_count = 0;
  std::uint32_t payload_bytes = 0;

  std::uint64_t stored_bytes() const { return 12 + static_cast<std::uint64_t>(payload_bytes); }
};

/// Encodes one event in schema order, appending to `out`.
void encode_event(const Event &event, std::vector<std::uint8_t> &out);

class EvtWriter {
 public:
  /// Throws SchemaViolation unless `schema` is the event layout schema.
  EvtWriter(std::string path, const Schema &schema, EvtWriteOptions options = {});
  ~EvtWriter();
  EvtWriter(const EvtWriter &) = delete;
  EvtWriter &operator=(const EvtWriter &) = delete;

  /// Validates and buffers one event; flushes a block every block_events.
  void write(const Event &event);
  void close();

  std::uint64_t events_written() const { return events_written_; }
  std::uint64_t blocks_written() const { return blocks_written_; }

 private:
  void flush_block();

  std::string path_;
  EvtWriteOptions options_;
  std::unique_ptr<std::FILE, int (*)(std::FILE *)> file_;
  std::vector<std::uint8_t> pending_;
  std::vector<std::uint8_t> scratch_;
  std::uint32_t pending_events_ = 0;
  std::uint64_t events_written_ = 0;
  std::uint64_t blocks_written_ = 0;
  bool closed_ = false;
};

void write_evt(const std::string &path, std::span<const Event> events, const Schema &schema,
               EvtWriteOptions options = {});

/// Stored bytes of one block, as read from the file.
struct RawBlock {
  std::size_t index = 0;
  std::uint32_t event_count = 0;
  std::uint32_t crc = 0;
  std::vector<std::uint8_t> payload;
};

class EvtReader {
 public:
  /// Reads magic, header and flags. Errors: UnreadableFile, BadMagic,
  /// CorruptHeader, SchemaViolation (valid schema that is not the event layout).
  explicit EvtReader(std::string path);

  const std::string &path() const { return path_; }
  const Schema &schema() const { return schema_; }
  bool compressed() const { return compressed_; }
  std::uint64_t data_offset() const { return data_offset_; }

  /// Block table built by walking block headers (no payload reads, not
  /// counted). Errors: TruncatedBlock.
  const std::vector<BlockInfo> &blocks();

  /// Sequential block read; false at a clean end of file.
  bool next_raw(RawBlock &raw);
  bool next_block(std::vector<Event> &out);

  /// Random access read of a block from blocks().
  void read_raw(std::size_t block_index, RawBlock &raw);

  /// Verifies the CRC, inflates if needed and appends the events to `out`. Errors:
  /// CrcMismatch, TruncatedBlock.
  void decode(const RawBlock &raw, std::vector<Event> &out);

  const IoCounters &counters() const { return counters_; }

 private:
  bool read_block_at_cursor(RawBlock &raw, std::size_t index);

  std::string path_;
  std::unique_ptr<std::FILE, int (*)(std::FILE *)> file_;
  Schema schema_;
  bool compressed_ = false;
  std::uint64_t data_offset_ = 0;
  std::uint64_t file_size_ = 0;
  std::uint64_t cursor_ = 0;
  std::size_t next_index_ = 0;
  std::vector<BlockInfo> blocks_;
  bool blocks_scanned_ = false;
  IoCounters counters_;
  std::vector<std::uint8_t> inflated_;
};

/// Reads the whole file. Returns the header schema through `schema_out` if given.
std::vector<Event> read_evt(const std::string &path, Schema *schema_out = nullptr);

/// Rewrites `input` to `output` with the requested compression and block size.
void convert_evt(const std::string &input, const std::string &output, EvtWriteOptions options);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace skimflow

#endif  // SKIMFLOW_EVT_FILE_HPP_
