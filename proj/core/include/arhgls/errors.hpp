#pragma once

#include <stdexcept>
#include <string>

namespace arhgls {

/// Raised when an input violates a documented precondition (domain bounds,
/// dimension mismatch, malformed argument). Maps to CLI usage failure.
class domain_error : public std::invalid_argument {
public:
    explicit domain_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a computation cannot proceed numerically (near-singular
/// matrix, rank-deficient design, degenerate eigenvalues). Maps to CLI
/// numerical-failure exit status.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised by the configuration parser; the message names the offending key.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace arhgls
