#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cwf {

// Base of every error raised by the library; nothing fails silently.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line)
        : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Data violating a documented invariant (OHLC ordering, gaps, alignment).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Input outside the mathematical domain of an operation (log of prices <= 1, zero variance).
class DomainError : public Error {
public:
    using Error::Error;
};

// Misuse of a state machine or API that indicates a caller bug.
class LogicError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace cwf
