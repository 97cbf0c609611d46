#pragma once

#include <stdexcept>
#include <string>

namespace kgalign {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Inputs violate a documented contract (bad flags, malformed files,
/// dimension mismatches). Maps to CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// File content does not match its documented format.
class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Shapes or dimensions are inconsistent.
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Normal-equations matrix is rank deficient; retry with ridge > 0.
class SingularMatrixError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Filesystem failure (open/read/write). Maps to CLI exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss. Maps to CLI exit code 2.
class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace kgalign
