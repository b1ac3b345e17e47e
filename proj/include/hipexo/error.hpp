#pragma once

#include <stdexcept>
#include <string>

namespace hipexo {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter values. Reported before any work starts.
struct ConfigError : Error {
    using Error::Error;
};

/// Malformed or incomplete input data (files, channels, series).
struct DataError : Error {
    using Error::Error;
};

/// Broken stream ordering, e.g. non-increasing timestamps.
struct StreamError : Error {
    using Error::Error;
};

/// A caller passed a value outside an operation's documented domain.
struct ContractError : Error {
    using Error::Error;
};

}  // namespace hipexo
