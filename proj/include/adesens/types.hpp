#ifndef ADESENS_TYPES_HPP_
#define ADESENS_TYPES_HPP_

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <string_view>

namespace adesens {

// Covariates are stored one sample per row so that a single sample's
// covariate vector is contiguous.
using CovariateMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CovariateRow = Eigen::Ref<const Eigen::RowVectorXd>;

enum class OutcomeType { kContinuous, kBinary };

std::string_view to_string(OutcomeType type);
OutcomeType parse_outcome_type(std::string_view text);

// Error hierarchy.  The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files (CSV cells, config lines).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Values outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration or usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Linear algebra breakdown, e.g. singular normal equations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Operation that the fitted object does not support (median of a binary fit).
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

// Broken internal contract, e.g. a fold without a fitted model.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace adesens

#endif  // ADESENS_TYPES_HPP_
