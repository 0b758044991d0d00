#pragma once

#include <stdexcept>
#include <string>

namespace ratecast {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or incomplete input file.
class LoadError : public Error {
public:
    using Error::Error;
};

/// Lookup of a maturity label (or other key) that does not exist.
class KeyError : public Error {
public:
    using Error::Error;
};

/// Maturity label matching neither naming convention.
class ClassificationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative evaluation that failed to converge.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Distribution fit impossible on the given sample.
class FitError : public Error {
public:
    using Error::Error;
};

/// Goodness-of-fit test preconditions violated.
class TestError : public Error {
public:
    using Error::Error;
};

/// No shift mode moves the sample to strictly positive values.
class ShiftError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration or arguments.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace ratecast
