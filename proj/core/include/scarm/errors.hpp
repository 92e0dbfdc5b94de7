#pragma once

#include <stdexcept>
#include <string>

namespace scarm {

// Bad user input: malformed files, schema violations, invalid option values.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Data that parses but violates a domain invariant (treatment outside {0,1},
// duplicate ids, degenerate cohorts, ...).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures inside a fit or an estimator: no overlap, zero matches,
// diverging solver, excessive bootstrap failures.
class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace scarm
