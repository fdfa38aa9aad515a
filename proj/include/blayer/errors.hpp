#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace blayer {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments: zero lattice vector, non-unit direction, malformed literal.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Mesh spacing incompatible with the strip periods or height.
class InvalidMesh : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Configuration file rejected during validation.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// An operator failed a sampled structural check. Carries the offending pair.
class OperatorInvalid : public Error {
public:
    OperatorInvalid(const std::string& what, std::vector<double> p, std::vector<double> q)
        : Error(what), p_(std::move(p)), q_(std::move(q)) {}

    const std::vector<double>& witness_p() const noexcept { return p_; }
    const std::vector<double>& witness_q() const noexcept { return q_; }

private:
    std::vector<double> p_;
    std::vector<double> q_;
};

/// Iterative solver did not reach its tolerance. `trace` holds the residual
/// (or energy) history.
class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, std::vector<double> trace)
        : Error(what), trace_(std::move(trace)) {}

    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

/// An invariant the algorithm guarantees was observed broken.
class InternalConsistency : public Error {
public:
    using Error::Error;
};

}  // namespace blayer
