#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace styleprof {

enum class ErrorCode {
    Parse,
    Conflict,
    Schema,
    Resolution,
    Stratification,
    DegenerateTraining,
    Calibration,
    DimensionMismatch,
    Format,
    Divergence,
    InvalidArgument,
    NotFound,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Domain error carrying a machine-readable code. `line` is 1-based and 0
/// when not applicable.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::size_t line = 0);

    ErrorCode code() const noexcept { return code_; }
    std::size_t line() const noexcept { return line_; }

private:
    ErrorCode code_;
    std::size_t line_;
};

}  // namespace styleprof
