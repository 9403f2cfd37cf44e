#pragma once

#include <stdexcept>
#include <string>

namespace ecgra {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data (bad CSV row, unknown label,
// id mismatch, wrong lead count, ...). CLI exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

// Numerical failure (non-finite loss or gradient, zero-variance lead,
// signal too short for the requested transform, ...). CLI exit code 3.
class NumericError : public Error {
public:
    using Error::Error;
};

// Bad configuration or command usage. CLI exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ecgra
