#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace apl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model violates one of the POMDP invariants (row sums, ranges, discount).
class InvalidModel : public Error {
public:
    using Error::Error;
};

/// Bayes filtering met an observation with zero probability under the model.
class ZeroProbabilityObservation : public Error {
public:
    using Error::Error;
};

/// A trace has zero likelihood under the model, so smoothing is undefined.
class ImpossibleTrace : public Error {
public:
    using Error::Error;
};

/// A parameter vector lies outside the support of its prior.
class OutOfSupport : public Error {
public:
    using Error::Error;
};

/// A parameter enters the template in a way the conjugate update cannot handle.
class UnsupportedParameterRole : public Error {
public:
    using Error::Error;
};

/// The template has an absorbing terminal state and cannot be extended.
class EpisodicTemplate : public Error {
public:
    using Error::Error;
};

class NoFeasibleStart : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed text input. `line()` is 1-based; 0 means the error is not tied to a line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace apl
