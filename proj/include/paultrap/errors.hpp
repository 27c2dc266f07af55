#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace paultrap {

/// Bad input: a precondition on a value or document was violated.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Evaluation point outside the region where a model is defined (e.g. z <= 0).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative solver stopped without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> last_iterate, double residual)
        : std::runtime_error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
    double residual() const noexcept { return residual_; }

private:
    std::vector<double> last_iterate_;
    double residual_;
};

/// The total potential at equilibrium has a non-positive curvature direction.
class NotConfiningError : public std::runtime_error {
public:
    NotConfiningError(const std::string& what, std::vector<double> eigenvalues)
        : std::runtime_error(what), eigenvalues_(std::move(eigenvalues)) {}

    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }

private:
    std::vector<double> eigenvalues_;
};

}  // namespace paultrap
