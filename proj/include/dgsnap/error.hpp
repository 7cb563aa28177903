// Copyright 2026 The dgsnap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DGSNAP_ERROR_HPP
#define DGSNAP_ERROR_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dgsnap {

enum class Errc {
  // graph_model
  EmptyDataset,
  UnorderedTimestamps,
  NonContiguousRun,
  InvalidFrame,
  InvalidThresholds,
  // ingest
  MalformedRow,
  NonMonotoneTimestamps,
  UnknownUnits,
  MissingPositions,
  ScoreRegression,
  InvalidConfig,
  // features
  OrdinalOutOfRange,
  NegativeInput,
  EmptySnapshot,
  NodeAbsent,
  // snapshot_engine
  UniverseMismatch,
  LayerNotTop,
  CannotDeleteBase,
  ReplayMismatch,
  // projection
  TooFewPoints,
  DimensionMismatch,
  // service
  NotFound,
  RangeInvalid,
  NonContiguousSelection,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::UnorderedTimestamps: return "UnorderedTimestamps";
    case Errc::NonContiguousRun: return "NonContiguousRun";
    case Errc::InvalidFrame: return "InvalidFrame";
    case Errc::InvalidThresholds: return "InvalidThresholds";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case Errc::UnknownUnits: return "UnknownUnits";
    case Errc::MissingPositions: return "MissingPositions";
    case Errc::ScoreRegression: return "ScoreRegression";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::OrdinalOutOfRange: return "OrdinalOutOfRange";
    case Errc::NegativeInput: return "NegativeInput";
    case Errc::EmptySnapshot: return "EmptySnapshot";
    case Errc::NodeAbsent: return "NodeAbsent";
    case Errc::UniverseMismatch: return "UniverseMismatch";
    case Errc::LayerNotTop: return "LayerNotTop";
    case Errc::CannotDeleteBase: return "CannotDeleteBase";
    case Errc::ReplayMismatch: return "ReplayMismatch";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotFound: return "NotFound";
    case Errc::RangeInvalid: return "RangeInvalid";
    case Errc::NonContiguousSelection: return "NonContiguousSelection";
  }
  return "Unknown";
}

/// The single exception type thrown by the library. `code()` identifies the
/// failure; `line()` is set for errors tied to a line of an input file
/// (1-based, header included).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(format(code, detail, line)),
        code_(code),
        line_(line),
        detail_(detail) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(Errc code, const std::string& detail,
                            std::optional<std::size_t> line) {
    std::string out(to_string(code));
    if (line) out += " (line " + std::to_string(*line) + ")";
    if (!detail.empty()) out += ": " + detail;
    return out;
  }

  Errc code_;
  std::optional<std::size_t> line_;
  std::string detail_;
};

}  // namespace dgsnap

#endif  // DGSNAP_ERROR_HPP
