#pragma once

#include <stdexcept>
#include <string>

namespace sentinel {

// Base for every error the library raises. Callers that only care about
// "something in the pipeline failed" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Header missing, renamed or out of order.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Well-formed file whose content violates a domain rule.
class DataError : public Error {
public:
    using Error::Error;
};

// Bad user configuration (counts, ranges, hyperparameters).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Request outside the range covered by the data.
class RangeError : public Error {
public:
    using Error::Error;
};

// A statistic or model is undefined for the given input
// (zero variance, a single class, no device events, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Iterative optimizer produced a non-finite objective.
class DivergenceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace sentinel
