#include "greenview/error.hpp"

namespace greenview {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptImage: return "CorruptImage";
    case ErrorCode::NotALabelImage: return "NotALabelImage";
    case ErrorCode::NonBinaryMask: return "NonBinaryMask";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EmptyAggregate: return "EmptyAggregate";
    case ErrorCode::MixedScope: return "MixedScope";
    case ErrorCode::PoolingUnavailable: return "PoolingUnavailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingMask: return "MissingMask";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InvalidQuantile: return "InvalidQuantile";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::AlreadySplit: return "AlreadySplit";
    case ErrorCode::OrphanLabel: return "OrphanLabel";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingMaskFile: return "MissingMaskFile";
    case ErrorCode::IncompatibleModel: return "IncompatibleModel";
    case ErrorCode::EmptyNetwork: return "EmptyNetwork";
    case ErrorCode::NotEnoughPoints: return "NotEnoughPoints";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::NoImageryAtPoint: return "NoImageryAtPoint";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Cancelled: return "Cancelled";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace greenview
