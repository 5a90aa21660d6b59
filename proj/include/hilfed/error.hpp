#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hilfed {

/// Malformed input text. Carries the 1-based line number of the offending record.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

enum class ModelErrorKind {
    dangling_reference,
    duplicate_id,
    missing_slack,
    multiple_slack,
    non_radial,
    disconnected,
    phase_mismatch,
    invalid_value,
};

/// A syntactically valid document that violates a model invariant.
class ModelError : public std::runtime_error {
public:
    ModelError(ModelErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ModelErrorKind kind() const noexcept { return kind_; }

private:
    ModelErrorKind kind_;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hilfed
