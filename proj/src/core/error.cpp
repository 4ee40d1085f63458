#include "uwsr/error.hpp"

namespace uwsr {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingFolder: return "MissingFolder";
        case ErrorCode::UnpairedImage: return "UnpairedImage";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DecodeError: return "DecodeError";
        case ErrorCode::EncodeError: return "EncodeError";
        case ErrorCode::UnsupportedChannelCount: return "UnsupportedChannelCount";
        case ErrorCode::CropTooLarge: return "CropTooLarge";
        case ErrorCode::InvalidRange: return "InvalidRange";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::NotDivisibleBy4: return "NotDivisibleBy4";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::NonFiniteOutput: return "NonFiniteOutput";
        case ErrorCode::NonFiniteLogits: return "NonFiniteLogits";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::IndivisibleDims: return "IndivisibleDims";
        case ErrorCode::ZeroMatrix: return "ZeroMatrix";
        case ErrorCode::WeightsUnavailable: return "WeightsUnavailable";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::StrictMismatch: return "StrictMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::CheckpointMissing: return "CheckpointMissing";
        case ErrorCode::TooSmall: return "TooSmall";
        case ErrorCode::MissingCell: return "MissingCell";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace uwsr
