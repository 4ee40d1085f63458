#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uwsr {

enum class ErrorCode {
    MissingFolder,
    UnpairedImage,
    DimensionMismatch,
    DecodeError,
    EncodeError,
    UnsupportedChannelCount,
    CropTooLarge,
    InvalidRange,
    InvalidConfig,
    NotDivisibleBy4,
    NonFiniteInput,
    NonFiniteOutput,
    NonFiniteLogits,
    NonFiniteLoss,
    IndivisibleDims,
    ZeroMatrix,
    WeightsUnavailable,
    ParseError,
    StrictMismatch,
    ShapeMismatch,
    CheckpointMissing,
    TooSmall,
    MissingCell,
    OutOfBounds,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the toolkit; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace uwsr
