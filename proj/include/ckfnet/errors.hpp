#pragma once

#include <stdexcept>
#include <string>

namespace ckfnet {

/// A covariance handed to a factorization was not symmetric positive definite.
class NotPositiveDefinite : public std::runtime_error {
public:
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

/// The Jacobi eigensolver did not converge within its sweep budget.
class NoConvergence : public std::runtime_error {
public:
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

/// A training batch produced a NaN/Inf loss; carries the offending trajectory ids.
class NonFiniteLoss : public std::runtime_error {
public:
    explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ckfnet
