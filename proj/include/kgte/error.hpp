#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kgte {

enum class ErrorCode {
    InvalidArgument,
    MalformedRecord,
    EmptySplit,
    Io,
    Parse,
    VersionMismatch,
    DimensionMismatch,
    EmptyInput,
    BudgetExceeded,
    Transport,   // retryable
    Api,
    Misaligned,
};

std::string_view to_string(ErrorCode code);

/// Base exception for the library. `code()` is stable and is what the CLI
/// emits in its machine-readable error record.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised while reading a dataset split: carries the 1-based line number.
class RecordError : public Error {
public:
    RecordError(std::string path, std::size_t line, const std::string& what)
        : Error(ErrorCode::MalformedRecord,
                path + ":" + std::to_string(line) + ": " + what),
          path_(std::move(path)), line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

/// Raised while reading a structured document: carries the byte offset.
class DocumentParseError : public Error {
public:
    DocumentParseError(std::size_t byte_offset, const std::string& what)
        : Error(ErrorCode::Parse,
                "parse error at byte " + std::to_string(byte_offset) + ": " + what),
          byte_offset_(byte_offset) {}

    std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// HTTP-level failure. `retryable()` distinguishes transport faults
/// (timeouts, refused connections, 5xx/429) from permanent API errors.
class RemoteError : public Error {
public:
    RemoteError(ErrorCode code, int status, const std::string& what)
        : Error(code, what), status_(status) {}

    int status() const noexcept { return status_; }
    bool retryable() const noexcept { return code() == ErrorCode::Transport; }

private:
    int status_;
};

}  // namespace kgte
