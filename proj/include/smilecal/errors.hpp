#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smilecal {

/// Argument outside the mathematical domain of an operation (K <= 0, p not in (0,1), ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Option price outside the open no-arbitrage interval.
class ArbitrageError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class InsufficientDataError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Fit parameters cannot be identified from the supplied rows.
class RankDeficiencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OutOfRangeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace smilecal
