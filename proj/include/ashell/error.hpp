#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace ashell {

/// Base class of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of an operation (s <= 0, alpha > 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration: bad camera, malformed scene file, inconsistent grids.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A computation produced NaN/Inf where finite values are required.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

using WarningSink = std::function<void(const std::string&)>;

/// Routes non-fatal diagnostics (CFL advisories, empty shells). Defaults to stderr.
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace ashell
