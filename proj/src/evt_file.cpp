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

#include "skimflow/evt_file.hpp"

#include <cstring>
#include <filesystem>
#include <limits>

#include <zlib.h>

#include "byte_io.hpp"
#include "skimflow/error.hpp"

namespace skimflow {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'T', '1'};
constexpr std::uint8_t kFlagCompressed = 0x01;
constexpr std::uint32_t kMaxHeaderBytes = 1u << 24;
constexpr std::size_t kParticleBytes = 4 * 8 + 4;
constexpr std::size_t kEventFixedBytes = 6 * 8 + kCollectionCount * 4;

using detail::get_le;
using detail::put_le;

std::unique_ptr<std::FILE, int (*)(std::FILE *)> open_file(const std::string &path, const char *mode) {
  return {std::fopen(path.c_str(), mode), &std::fclose};
}

void deflate_raw(std::span<const std::uint8_t> in, std::vector<std::uint8_t> &out) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(Errc::IoFailure, "deflateInit2 failed");
  }
  out.resize(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<Bytef *>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(Errc::IoFailure, "deflate failed");
  out.resize(produced);
}

void inflate_raw(std::span<const std::uint8_t> in, std::vector<std::uint8_t> &out, std::size_t block_index) {
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) throw Error(Errc::IoFailure, "inflateInit2 failed");
  out.resize(std::max<std::size_t>(in.size() * 4, 4096));
  zs.next_in = const_cast<Bytef *>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (true) {
    zs.next_out = out.data() + zs.total_out;
    zs.avail_out = static_cast<uInt>(out.size() - zs.total_out);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc == Z_STREAM_END) break;
    if (rc != Z_OK && rc != Z_BUF_ERROR) break;
    if (zs.avail_out == 0) {
      out.resize(out.size() * 2);
    } else if (zs.avail_in == 0) {
      rc = Z_DATA_ERROR;
      break;
    }
  }
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) {
    throw Error(Errc::TruncatedBlock, "block " + std::to_string(block_index) + " does not inflate cleanly");
  }
  out.resize(produced);
}

class PayloadCursor {
 public:
  PayloadCursor(std::span<const std::uint8_t> bytes, std::size_t block_index)
      : bytes_(bytes), block_(block_index) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(Errc::TruncatedBlock, "block " + std::to_string(block_) + " payload ends inside an event");
    }
  }
  template <typename T>
  T take() {
    need(sizeof(T));
    T v = get_le<T>(bytes_.data() + pos_);
    pos_ += sizeof(T);
    return v;
  }
  template <typename T>
  T take_unchecked() {
    T v = get_le<T>(bytes_.data() + pos_);
    pos_ += sizeof(T);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::size_t block_;
};

void decode_payload(std::span<const std::uint8_t> bytes, std::uint32_t count, std::size_t block_index,
                    std::vector<Event> &out) {
  if (static_cast<std::uint64_t>(count) * kEventFixedBytes > bytes.size()) {
    throw Error(Errc::TruncatedBlock,
                "block " + std::to_string(block_index) + " is too short for its declared event count");
  }
  PayloadCursor cur(bytes, block_index);
  const std::size_t base = out.size();
  out.resize(base + count);
  for (std::uint32_t e = 0; e < count; ++e) {
    Event &ev = out[base + e];
    cur.need(kEventFixedBytes - kCollectionCount * 4);
    ev.run = cur.take_unchecked<std::int64_t>();
    ev.lumi = cur.take_unchecked<std::int64_t>();
    ev.event = cur.take_unchecked<std::int64_t>();
    ev.gen_weight = cur.take_unchecked<double>();
    ev.met_pt = cur.take_unchecked<double>();
    ev.met_phi = cur.take_unchecked<double>();
    for (auto &coll : ev.collections) {
      const auto n = cur.take<std::uint32_t>();
      cur.need(static_cast<std::size_t>(n) * kParticleBytes);
      coll.resize(n);
      for (auto &p : coll) {
        p.pt = cur.take_unchecked<double>();
        p.eta = cur.take_unchecked<double>();
        p.phi = cur.take_unchecked<double>();
        p.mass = cur.take_unchecked<double>();
        p.id = cur.take_unchecked<std::int32_t>();
      }
    }
  }
  if (!cur.done()) {
    throw Error(Errc::TruncatedBlock,
                "block " + std::to_string(block_index) + " payload length disagrees with its event count");
  }
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large spans.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, std::numeric_limits<uInt>::max());
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void encode_event(const Event &event, std::vector<std::uint8_t> &out) {
  put_le(out, event.run);
  put_le(out, event.lumi);
  put_le(out, event.event);
  put_le(out, event.gen_weight);
  put_le(out, event.met_pt);
  put_le(out, event.met_phi);
  for (const auto &coll : event.collections) {
    put_le(out, static_cast<std::uint32_t>(coll.size()));
    for (const auto &p : coll) {
      put_le(out, p.pt);
      put_le(out, p.eta);
      put_le(out, p.phi);
      put_le(out, p.mass);
      put_le(out, p.id);
    }
  }
}

// ---------------------------------------------------------------------------
// Writer
// ---------------------------------------------------------------------------

EvtWriter::EvtWriter(std::string path, const Schema &schema, EvtWriteOptions options)
    : path_(std::move(path)), options_(options), file_(nullptr, &std::fclose) {
  if (!(schema == event_schema())) {
    throw Error(Errc::SchemaViolation, "schema does not describe the event layout");
  }
  if (options_.block_events == 0 || options_.block_events > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::ConfigError, "block_events must be in [1, 2^32)");
  }
  file_ = open_file(path_, "wb");
  if (!file_) throw Error(Errc::IoFailure, "cannot open '" + path_ + "' for writing");
  const std::string header = schema.to_json();
  std::vector<std::uint8_t> head(kMagic, kMagic + 4);
  put_le(head, static_cast<std::uint32_t>(header.size()));
  head.insert(head.end(), header.begin(), header.end());
  head.push_back(options_.compress ? kFlagCompressed : 0);
  detail::write_all(file_.get(), head.data(), head.size(), path_);
}

EvtWriter::~EvtWriter() {
  if (!closed_ && file_) {
    file_.reset();
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

void EvtWriter::write(const Event &event) {
  validate_event(event);
  encode_event(event, pending_);
  ++pending_events_;
  if (pending_events_ >= options_.block_events) flush_block();
}

void EvtWriter::flush_block() {
  if (pending_events_ == 0) return;
  std::span<const std::uint8_t> payload = pending_;
  if (options_.compress) {
    deflate_raw(pending_, scratch_);
    payload = scratch_;
  }
  if (payload.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::IoFailure, "block payload exceeds 4 GiB; lower block_events");
  }
  std::vector<std::uint8_t> head;
  put_le(head, pending_events_);
  put_le(head, static_cast<std::uint32_t>(payload.size()));
  std::vector<std::uint8_t> tail;
  put_le(tail, crc32_of(payload));
  detail::write_all(file_.get(), head.data(), head.size(), path_);
  detail::write_all(file_.get(), payload.data(), payload.size(), path_);
  detail::write_all(file_.get(), tail.data(), tail.size(), path_);
  events_written_ += pending_events_;
  ++blocks_written_;
  pending_.clear();
  pending_events_ = 0;
}

void EvtWriter::close() {
  if (closed_) return;
  flush_block();
  if (std::fflush(file_.get()) != 0) throw Error(Errc::IoFailure, "flush failed for '" + path_ + "'");
  std::FILE *f = file_.release();
  closed_ = true;
  if (std::fclose(f) != 0) throw Error(Errc::IoFailure, "close failed for '" + path_ + "'");
}

void write_evt(const std::string &path, std::span<const Event> events, const Schema &schema,
               EvtWriteOptions options) {
  EvtWriter writer(path, schema, options);
  for (const auto &e : events) writer.write(e);
  writer.close();
}

// ---------------------------------------------------------------------------
// Reader
// ---------------------------------------------------------------------------

EvtReader::EvtReader(std::string path)
    : path_(std::move(path)), file_(open_file(path_, "rb")), schema_(event_schema()) {
  if (!file_) throw Error(Errc::UnreadableFile, "cannot open '" + path_ + "' for reading");
  file_size_ = detail::file_size(file_.get(), path_);
  std::uint8_t head[8];
  const std::size_t got = detail::read_some(file_.get(), head, 8);
  counters_.storage_bytes += got;
  if (got < 4 || std::memcmp(head, kMagic, 4) != 0) {
    throw Error(Errc::BadMagic, "'" + path_ + "' is not an EVT1 file");
  }
  if (got < 8) throw Error(Errc::CorruptHeader, "'" + path_ + "' ends inside the header length");
  const auto header_len = get_le<std::uint32_t>(head + 4);
  if (header_len > kMaxHeaderBytes || 8 + static_cast<std::uint64_t>(header_len) + 1 > file_size_) {
    throw Error(Errc::CorruptHeader, "'" + path_ + "' declares an impossible header length");
  }
  std::string header(header_len + 1, '\0');
  if (detail::read_some(file_.get(), header.data(), header.size()) != header.size()) {
    throw Error(Errc::CorruptHeader, "'" + path_ + "' ends inside the header");
  }
  counters_.storage_bytes += header.size();
  const auto flags = static_cast<std::uint8_t>(header.back());
  header.pop_back();
  if ((flags & ~kFlagCompressed) != 0) {
    throw Error(Errc::CorruptHeader, "'" + path_ + "' has unknown flag bits");
  }
  compressed_ = (flags & kFlagCompressed) != 0;
  try {
    schema_ = Schema::from_json(header);
  } catch (const Error &e) {
    throw Error(Errc::CorruptHeader, "'" + path_ + "': " + e.what());
  }
  if (!(schema_ == event_schema())) {
    throw Error(Errc::SchemaViolation, "'" + path_ + "' schema is not the event layout");
  }
  data_offset_ = 8 + static_cast<std::uint64_t>(header_len) + 1;
  cursor_ = data_offset_;
}

const std::vector<BlockInfo> &EvtReader::blocks() {
  if (blocks_scanned_) return blocks_;
  std::uint64_t pos = data_offset_;
  while (pos < file_size_) {
    if (file_size_ - pos < 8) {
      throw Error(Errc::TruncatedBlock, "block " + std::to_string(blocks_.size()) + " header is truncated");
    }
    detail::seek_to(file_.get(), pos, path_);
    std::uint8_t head[8];
    detail::read_some(file_.get(), head, 8);
    BlockInfo info{pos, get_le<std::uint32_t>(head), get_le<std::uint32_t>(head + 4)};
    if (pos + info.stored_bytes() > file_size_) {
      throw Error(Errc::TruncatedBlock, "block " + std::to_string(blocks_.size()) + " is truncated");
    }
    blocks_.push_back(info);
    pos += info.stored_bytes();
  }
  detail::seek_to(file_.get(), cursor_, path_);
  blocks_scanned_ = true;
  return blocks_;
}

bool EvtReader::read_block_at_cursor(RawBlock &raw, std::size_t index) {
  detail::seek_to(file_.get(), cursor_, path_);
  std::uint8_t head[8];
  const std::size_t got = detail::read_some(file_.get(), head, 8);
  counters_.storage_bytes += got;
  if (got == 0) return false;
  if (got < 8) throw Error(Errc::TruncatedBlock, "block " + std::to_string(index) + " header is truncated");
  raw.index = index;
  raw.event_count = get_le<std::uint32_t>(head);
  const auto payload_len = get_le<std::uint32_t>(head + 4);
  raw.payload.resize(payload_len);
  const std::size_t body = detail::read_some(file_.get(), raw.payload.data(), payload_len);
  counters_.storage_bytes += body;
  std::uint8_t crc[4];
  const std::size_t crc_got = body == payload_len ? detail::read_some(file_.get(), crc, 4) : 0;
  counters_.storage_bytes += crc_got;
  if (body != payload_len || crc_got != 4) {
    throw Error(Errc::TruncatedBlock, "block " + std::to_string(index) + " is truncated");
  }
  raw.crc = get_le<std::uint32_t>(crc);
  cursor_ += 12 + static_cast<std::uint64_t>(payload_len);
  return true;
}

bool EvtReader::next_raw(RawBlock &raw) {
  if (cursor_ >= file_size_) return false;
  if (!read_block_at_cursor(raw, next_index_)) return false;
  ++next_index_;
  return true;
}

bool EvtReader::next_block(std::vector<Event> &out) {
  RawBlock raw;
  if (!next_raw(raw)) return false;
  decode(raw, out);
  return true;
}

void EvtReader::read_raw(std::size_t block_index, RawBlock &raw) {
  const auto &table = blocks();
  if (block_index >= table.size()) {
    throw Error(Errc::TruncatedBlock, "block " + std::to_string(block_index) + " does not exist");
  }
  cursor_ = table[block_index].offset;
  if (!read_block_at_cursor(raw, block_index)) {
    throw Error(Errc::TruncatedBlock, "block " + std::to_string(block_index) + " is missing");
  }
  next_index_ = block_index + 1;
}

void EvtReader::decode(const RawBlock &raw, std::vector<Event> &out) {
  if (crc32_of(raw.payload) != raw.crc) {
    throw Error(Errc::CrcMismatch, "'" + path_ + "' block " + std::to_string(raw.index) + " fails its CRC check");
  }
  std::span<const std::uint8_t> bytes = raw.payload;
  if (compressed_) {
    inflate_raw(raw.payload, inflated_, raw.index);
    bytes = inflated_;
  }
  counters_.decoded_bytes += bytes.size();
  decode_payload(bytes, raw.event_count, raw.index, out);
}

std::vector<Event> read_evt(const std::string &path, Schema *schema_out) {
  EvtReader reader(path);
  std::vector<Event> events;
  while (reader.next_block(events)) {
  }
  if (schema_out != nullptr) *schema_out = reader.schema();
  return events;
}

void convert_evt(const std::string &input, const std::string &output, EvtWriteOptions options) {
  if (std::filesystem::exists(output) && std::filesystem::exists(input) &&
      std::filesystem::equivalent(input, output)) {
    throw Error(Errc::IoFailure, "convert input and output are the same file");
  }
  EvtReader reader(input);
  EvtWriter writer(output, reader.schema(), options);
  std::vector<Event> block;
  while (true) {
    block.clear();
    if (!reader.next_block(block)) break;
    for (const auto &e : block) writer.write(e);
  }
  writer.close();
}

}  // namespace skimflow
