#pragma once

#include <stdexcept>
#include <string>

namespace pfc {

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input violates a documented invariant (e.g. non-positive price).
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string msg, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Two quotes claim the same (tenor, roll slot) on one observation date.
class AmbiguityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Constraint assembly failed (e.g. a contract endpoint is not a knot).
class AssemblyError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A linear solve or ODE integration failed; carries a condition estimate
/// when one is available (0 when not).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(std::string msg, double condition_estimate = 0.0)
        : std::runtime_error(std::move(msg)), condition_(condition_estimate) {}
    [[nodiscard]] double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

/// Too few usable observations for the requested statistic.
class InsufficientDataError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A parent/children decomposition does not partition the parent window.
class StructuralError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Simulated event count exceeded the safety cap.
class ExplosionError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace pfc
