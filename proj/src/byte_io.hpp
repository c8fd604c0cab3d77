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

#ifndef SKIMFLOW_SRC_BYTE_IO_HPP_
#define SKIMFLOW_SRC_BYTE_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "skimflow/error.hpp"

namespace skimflow::detail {

// Little-endian append/read on byte buffers.

template <typename T>
inline void put_le(std::vector<std::uint8_t> &buf, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t,
                               std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  U bits = std::bit_cast<U>(value);
  std::uint8_t bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<std::uint8_t>(bits >> (8 * i));
  buf.insert(buf.end(), bytes, bytes + sizeof(U));
}

template <typename T>
inline T get_le(const std::uint8_t *p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t,
                               std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return std::bit_cast<T>(bits);
}

struct FileCloser {
  void operator()(std::FILE *f) const { std::fclose(f); }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

inline FileHandle open_for_read(const std::string &path) {
  FileHandle f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(Errc::UnreadableFile, "cannot open '" + path + "' for reading");
  return f;
}

inline FileHandle open_for_write(const std::string &path) {
  FileHandle f(std::fopen(path.c_str(), "wb"));
  if (!f) throw Error(Errc::IoFailure, "cannot open '" + path + "' for writing");
  return f;
}

/// Reads up to n bytes; returns the count actually read.
inline std::size_t read_some(std::FILE *f, void *dst, std::size_t n) { return std::fread(dst, 1, n, f); }

inline void write_all(std::FILE *f, const void *src, std::size_t n, const std::string &path) {
  if (n != 0 && std::fwrite(src, 1, n, f) != n) throw Error(Errc::IoFailure, "short write to '" + path + "'");
}

inline void seek_to(std::FILE *f, std::uint64_t offset, const std::string &path) {
  if (fseeko(f, static_cast<off_t>(offset), SEEK_SET) != 0) {
    throw Error(Errc::IoFailure, "seek failed in '" + path + "'");
  }
}

inline std::uint64_t file_size(std::FILE *f, const std::string &path) {
  const off_t here = ftello(f);
  if (fseeko(f, 0, SEEK_END) != 0) throw Error(Errc::IoFailure, "seek failed in '" + path + "'");
  const off_t end = ftello(f);
  fseeko(f, here, SEEK_SET);
  return static_cast<std::uint64_t>(end);
}

}  // namespace skimflow::detail

#endif  // SKIMFLOW_SRC_BYTE_IO_HPP_
