#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace greenview {

enum class ErrorCode {
  // imaging
  UnreadableFile,
  UnsupportedFormat,
  CorruptImage,
  NotALabelImage,
  NonBinaryMask,
  // gvi
  EmptyMask,
  EmptyAggregate,
  MixedScope,
  PoolingUnavailable,
  // metrics
  DimensionMismatch,
  MissingMask,
  EmptyInput,
  ZeroVariance,
  InvalidQuantile,
  // dataset
  DuplicateId,
  MalformedRow,
  MissingColumn,
  SizeMismatch,
  AlreadySplit,
  OrphanLabel,
  // inference
  BackendFailure,
  ShapeMismatch,
  MissingMaskFile,
  IncompatibleModel,
  // geo
  EmptyNetwork,
  NotEnoughPoints,
  QuotaExceeded,
  NoImageryAtPoint,
  TransportError,
  // general
  InvalidArgument,
  IoError,
  Cancelled,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception type thrown by every greenview operation. The code identifies
/// the failure class; what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace greenview
