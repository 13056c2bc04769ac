#pragma once

#include <stdexcept>

namespace tempdepth {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed header or unexpected magic bytes.
struct FormatError : Error {
    using Error::Error;
};

// Payload shorter than the header declares.
struct TruncationError : Error {
    using Error::Error;
};

// Unreadable or unwritable path.
struct IoError : Error {
    using Error::Error;
};

// Dimension mismatch or unusable extent.
struct SizeError : Error {
    using Error::Error;
};

// Input violates an operation's contract.
struct PreconditionError : Error {
    using Error::Error;
};

// Nothing valid to aggregate over.
struct EmptyInputError : Error {
    using Error::Error;
};

// Degenerate or non-finite numeric state.
struct NumericError : Error {
    using Error::Error;
};

} // namespace tempdepth
