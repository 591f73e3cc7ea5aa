// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pvsm {

enum class ErrorCode {
    PointBehindCamera,
    NonPositiveScale,
    NonUnitDirection,
    DimensionMismatch,
    InvalidSpec,
    DegenerateDolly,
    IndivisibleImage,
    EmptyMask,
    TooSmall,
    MissingFile,
    MalformedJson,
    ConventionMismatch,
    MalformedHeader,
    IoFailure,
};

inline constexpr std::string_view
to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::PointBehindCamera: return "PointBehindCamera";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::NonUnitDirection: return "NonUnitDirection";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DegenerateDolly: return "DegenerateDolly";
    case ErrorCode::IndivisibleImage: return "IndivisibleImage";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::ConventionMismatch: return "ConventionMismatch";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it onto a stable exit status.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), mCode(code) {}

    ErrorCode
    code() const noexcept {
        return mCode;
    }

  private:
    ErrorCode mCode;
};

[[noreturn]] inline void
fail(ErrorCode code, const std::string &message) {
    throw Error(code, message);
}

} // namespace pvsm
