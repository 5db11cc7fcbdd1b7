#pragma once

#include <stdexcept>
#include <string>

namespace scorecraft {

// Common base so callers can catch anything raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Operand shapes do not conform (matmul dims, elementwise mismatch, ...).
class ShapeError : public Error {
public:
    using Error::Error;
};

// Value outside the mathematical domain of an operation: log of a
// non-positive number, division by zero, non-finite input, degenerate
// (constant) data where spread is required.
class DomainError : public Error {
public:
    using Error::Error;
};

// API misuse: a precondition on how the engine is driven was violated
// (non-scalar backward root, too-small batch, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Invalid or inconsistent user-supplied configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input file (CSV cell, missing header, bad JSON).
class ParseError : public Error {
public:
    using Error::Error;
};

// A metric cannot be computed from the given series.
class MetricError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace scorecraft
