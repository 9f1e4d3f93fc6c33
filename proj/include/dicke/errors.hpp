#pragma once

#include <stdexcept>
#include <string>

namespace dicke {

// Invalid experiment or model configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Singular or ill-conditioned linear system, or a solve whose residual is too large.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fock truncation not converged or a state invariant violated (CLI exit code 3).
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dicke
