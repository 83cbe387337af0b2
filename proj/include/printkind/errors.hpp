#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace printkind {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid command-line usage. Maps to exit code 1.
class UsageError : public Error {
public:
    using Error::Error;
};

// Bad input data or a failed validation. Maps to exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

class ShapeError : public DataError {
public:
    using DataError::DataError;
};

// Non-finite loss or gradient. Maps to exit code 3.
class NumericError : public Error {
public:
    using Error::Error;
};

class ArchParseError : public DataError {
public:
    ArchParseError(const std::string& what, std::size_t offset)
        : DataError(what + " at byte " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace printkind
