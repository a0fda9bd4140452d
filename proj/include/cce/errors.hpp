#ifndef CCE_ERRORS_HPP
#define CCE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cce {

// Base class for everything this library throws on bad input or bad files.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem-level failures: missing paths, unreadable or unwritable files.
class IoError : public Error {
public:
    using Error::Error;
};

// Structurally malformed text input (wrong column count, bad number, ...).
// Carries the 1-based line number of the offending line.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line)
        : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// A tag label that is not part of the active tag set.
class TagError : public Error {
public:
    TagError(const std::string& message, std::size_t line)
        : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Semantically invalid data: IOB2 violations, shape mismatches, bad arguments.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed binary or vector-file content.
class FormatError : public Error {
public:
    using Error::Error;
};

// Model container declares an unsupported format version.
class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

// Model container ends before its declared payload does.
class TruncationError : public FormatError {
public:
    using FormatError::FormatError;
};

// Model container payload does not match its checksum.
class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};

// Non-finite values encountered during training.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace cce

#endif
