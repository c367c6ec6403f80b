#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace activeid {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
   public:
    using Error::Error;
};

// Raised when an operation that needs rho(A) < 1 receives an unstable matrix.
class StabilityError : public Error {
   public:
    using Error::Error;
};

class SingularError : public Error {
   public:
    using Error::Error;
};

class NormalizationError : public Error {
   public:
    using Error::Error;
};

class FeasibilityError : public Error {
   public:
    using Error::Error;
};

class ConfigError : public Error {
   public:
    using Error::Error;
};

// Least-squares regressors do not span the parameter space. `subspace` holds
// an orthonormal basis (columns) of the unexcited directions and `block`
// names the regressor block they live in ("state", "input" or "state+input").
class RankError : public Error {
   public:
    RankError(const std::string& what, Eigen::MatrixXd subspace, std::string block)
        : Error(what), subspace_(std::move(subspace)), block_(std::move(block)) {}

    const Eigen::MatrixXd& subspace() const { return subspace_; }
    const std::string&     block() const { return block_; }

   private:
    Eigen::MatrixXd subspace_;
    std::string     block_;
};

}  // namespace activeid
