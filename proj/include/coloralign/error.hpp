#pragma once

#include <stdexcept>
#include <string>

namespace coloralign {

// Bad or inconsistent input: malformed files, integrity violations, unknown
// terms, invalid configuration. The CLI maps these to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IntegrityError : public InputError {
public:
    using InputError::InputError;
};

class NotFoundError : public InputError {
public:
    using InputError::InputError;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class AlignmentError : public InputError {
public:
    using InputError::InputError;
};

// Numerical failures (undefined statistics, solver non-convergence).
// The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace coloralign
