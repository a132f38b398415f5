#pragma once

#include <stdexcept>
#include <string>

namespace pdsint {

/// Base of every failure the library reports. Nothing is signalled through
/// NaN or silent fallbacks.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad model, bad parameters, violated preconditions (CLI exit code 2).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Model text that does not parse; carries the 1-based line number.
class ParseError : public ModelError {
public:
    ParseError(std::size_t line, const std::string& what)
        : ModelError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A numerical routine did not reach its tolerance (CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace pdsint
