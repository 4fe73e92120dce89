#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace streampower {

// Base class for all toolkit errors. Subclasses map to distinct CLI exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid values or violated preconditions on otherwise well-formed input.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Shape mismatches, e.g. coefficient vectors of the wrong dimension.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Missing or inconsistent configuration (profile v_max, generator mixes).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Unreadable or unwritable files and streams.
class IoError : public Error {
public:
    using Error::Error;
};

// Input header or document shape does not match the expected schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Rank-deficient design matrix; carries the names of the collinear columns.
class SingularityError : public Error {
public:
    SingularityError(const std::string& message, std::vector<std::string> columns)
        : Error(message), columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const noexcept { return columns_; }

private:
    std::vector<std::string> columns_;
};

// Too few measurement rows for the requested fit.
class InsufficientDataError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// A provided-MOS source was asked about a record that carries no MOS.
class MissingMosError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace streampower
