#pragma once

#include <stdexcept>
#include <string>

namespace lowrank {

/// Caller supplied inconsistent arguments (dimension mismatch, bad rank, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Reading or writing a file failed, or its contents are malformed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical kernel failed to converge or a cross-check tolerance was violated.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The dense SVD oracle refuses problems above its size cap.
class CapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lowrank
