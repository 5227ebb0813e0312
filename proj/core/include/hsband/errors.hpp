#pragma once

#include <stdexcept>
#include <string>

namespace hsband {

// Precondition or argument violation detected before any computation.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class FormatErrorKind {
    kIo,
    kBadMagic,
    kWrongContainer,
    kTruncated,
    kTrailingBytes,
    kBadDimensions,
    kNonFinite,
    kLabelRange,
};

// Failure while reading or writing one of the binary containers.
class FormatError : public std::runtime_error {
public:
    FormatError(FormatErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    FormatErrorKind kind() const noexcept { return kind_; }

private:
    FormatErrorKind kind_;
};

}  // namespace hsband
