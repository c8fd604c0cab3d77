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

#ifndef SKIMFLOW_ERROR_HPP_
#define SKIMFLOW_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace skimflow {

enum class Errc {
  // expressions and schemas
  ParseError,
  UnknownField,
  TypeMismatch,
  NonScalarProjection,
  InvalidSchema,
  SchemaViolation,
  NameCollision,
  // storage
  IoFailure,
  BadMagic,
  CorruptHeader,
  CrcMismatch,
  TruncatedBlock,
  ArityMismatch,
  UnknownColumn,
  FooterMismatch,
  // engine
  NoFilesMatched,
  UnreadableFile,
  InvalidCustomPlan,
  CacheMemoryExceeded,
  // analysis and bench
  KindMismatch,
  ZeroSumOfWeights,
  LengthMismatch,
  SpecMismatch,
  IncomparableConfigs,
  ConfigError,
};

std::string_view errc_name(Errc code);

/// Which exit-code class an error belongs to when surfaced by the CLI.
enum class ErrorClass { Usage, Data, Io };

ErrorClass classify(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string &message);

  Errc code() const noexcept { return code_; }
  /// The message without the code-name prefix.
  const std::string &message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

}  // namespace skimflow

#endif  // SKIMFLOW_ERROR_HPP_
