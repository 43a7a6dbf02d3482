#pragma once

#include <stdexcept>
#include <string>

namespace riffle {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition or configuration violation (bad arguments, invalid
/// layout/dtype combinations, clobbering an existing store, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// On-disk data failed validation: bad magic, truncated shard, codec
/// failure, length mismatch. Messages identify the offending chunk/shard.
class CorruptStore : public Error {
public:
    using Error::Error;
};

/// An operating-system I/O failure (open, read, write).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace riffle
