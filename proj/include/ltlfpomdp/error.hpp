#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lpomdp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed formula text. `position` is the byte offset of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Input that violates a documented schema or invariant (bad model file,
/// unnormalized distribution, atom mismatch, out-of-range index...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A configured resource budget was exhausted (DFA state budget, oracle size guard).
class BudgetError : public Error {
public:
    using Error::Error;
};

/// The Bayes filter received an observation with zero probability.
class ImpossibleObservation : public Error {
public:
    using Error::Error;
};

} // namespace lpomdp
