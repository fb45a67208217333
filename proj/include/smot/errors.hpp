#pragma once

#include <stdexcept>
#include <string>

namespace smot {

// Malformed input data (CSV/JSON). Carries a 1-based line number when the
// source is line-oriented; line == 0 means "not line-addressable".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(line ? msg + ", line " + std::to_string(line) : msg),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Structurally valid input that violates a domain contract (missing file,
// dimension mismatch, unknown label, bad config value).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values where finite math is required (NaN gradient, NaN cost).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace smot
