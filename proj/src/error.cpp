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

#include "skimflow/error.hpp"

namespace skimflow {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownField: return "UnknownField";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::NonScalarProjection: return "NonScalarProjection";
    case Errc::InvalidSchema: return "InvalidSchema";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::NameCollision: return "NameCollision";
    case Errc::IoFailure: return "IoFailure";
    case Errc::BadMagic: return "BadMagic";
    case Errc::CorruptHeader: return "CorruptHeader";
    case Errc::CrcMismatch: return "CrcMismatch";
    case Errc::TruncatedBlock: return "TruncatedBlock";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::FooterMismatch: return "FooterMismatch";
    case Errc::NoFilesMatched: return "NoFilesMatched";
    case Errc::UnreadableFile: return "UnreadableFile";
    case Errc::InvalidCustomPlan: return "InvalidCustomPlan";
    case Errc::CacheMemoryExceeded: return "CacheMemoryExceeded";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::ZeroSumOfWeights: return "ZeroSumOfWeights";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::SpecMismatch: return "SpecMismatch";
    case Errc::IncomparableConfigs: return "IncomparableConfigs";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

ErrorClass classify(Errc code) {
  switch (code) {
    case Errc::IoFailure:
    case Errc::UnreadableFile:
      return ErrorClass::Io;
    case Errc::ParseError:
    case Errc::UnknownField:
    case Errc::TypeMismatch:
    case Errc::NonScalarProjection:
    case Errc::InvalidSchema:
    case Errc::NameCollision:
    case Errc::InvalidCustomPlan:
    case Errc::KindMismatch:
    case Errc::ConfigError:
    case Errc::SpecMismatch:
    case Errc::IncomparableConfigs:
    case Errc::NoFilesMatched:
      return ErrorClass::Usage;
    default:
      return ErrorClass::Data;
  }
}

Error::Error(Errc code, const std::string &message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code), message_(message) {}

}  // namespace skimflow
