#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opinion_audit {

/// Base class for problems with the input data (as opposed to misuse of the API or CLI).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A row or file that does not parse. `line()` is 1-based, 0 when unknown.
class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Data that parses but violates a dataset invariant (duplicate pair, unknown label, ...).
class SchemaError : public DataError {
public:
    using DataError::DataError;
};

/// Training or evaluation cannot proceed on the given data (absent class, non-finite loss, ...).
class TrainingError : public DataError {
public:
    using DataError::DataError;
};

/// Bad arguments from the caller; maps to CLI exit code 1.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace opinion_audit
