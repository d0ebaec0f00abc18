#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace symnet {

/// Reasons a single execution path can fail. These never abort the engine;
/// the offending path is terminated and the reason recorded.
enum class ErrorKind {
    UnknownTag,
    UnallocatedHeader,
    UnallocatedMetadata,
    MisalignedAccess,
    SymbolicAddress,
    OverlappingHeaderRegion,
    SizeMismatch,
    NotAllocated,
    WidthMismatch,
    WidthTooLarge,
    LiteralOverflow,
    UnknownShorthand,
    InvalidPort,
    UnsupportedFragment,
};

std::string_view to_string(ErrorKind kind);

/// Raised by state and evaluation code when the current path must fail.
class PathError : public std::runtime_error {
public:
    PathError(ErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail)
        , kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Positioned error from one of the text parsers.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column = 0)
        : std::runtime_error(format(message, line, column))
        , line_(line)
        , column_(column)
        , message_(message) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& message() const noexcept { return message_; }

private:
    static std::string format(const std::string& message, std::size_t line, std::size_t column) {
        std::string out = "line " + std::to_string(line);
        if (column != 0)
            out += ", column " + std::to_string(column);
        return out + ": " + message;
    }

    std::size_t line_;
    std::size_t column_;
    std::string message_;
};

/// Malformed models, networks or builder inputs (rejected before execution).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solver failures: unsupported input fragment or exhausted search budget.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace symnet
