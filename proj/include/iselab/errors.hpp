#pragma once

#include <stdexcept>
#include <string>

namespace iselab {

// Bad parameters, malformed files, violated preconditions. CLI exit code 1.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Eigensolver did not converge or a factorization broke down. CLI exit code 2.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// A checked inequality or invariant failed at run time. CLI exit code 3.
class AssertionFailure : public std::runtime_error {
public:
    explicit AssertionFailure(const std::string& what) : std::runtime_error(what) {}
};

} // namespace iselab
