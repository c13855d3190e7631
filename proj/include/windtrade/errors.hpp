#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace windtrade {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed input file. Carries the file name and 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
          file_(std::move(file)),
          line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

/// A calibration could not produce a usable result.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The explicit PDE scheme cannot be made monotone within the sub-step budget.
class CflError : public std::runtime_error {
public:
    CflError(const std::string& what, std::string suggestion)
        : std::runtime_error(what), suggestion_(std::move(suggestion)) {}

    const std::string& suggestion() const noexcept { return suggestion_; }

private:
    std::string suggestion_;
};

}  // namespace windtrade
