#pragma once

#include <stdexcept>
#include <string>

namespace nlobs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (non-finite input, exponent out of range, point not on a boundary, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Kernel evaluated on the diagonal x = y.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Invalid geometry / kernel / instance / pipeline configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A caller broke a documented precondition on the data it passed
/// (boundary values not matching, test function outside the admissible set, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Too few usable samples to produce a fit or a report.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

}  // namespace nlobs
