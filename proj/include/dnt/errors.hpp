#pragma once

#include <stdexcept>
#include <string>

namespace dnt {

// One exception type per error category named in the module contracts.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct StateError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace dnt
