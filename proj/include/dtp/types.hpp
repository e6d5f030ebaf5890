#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dtp {

using Scalar = double;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Invalid dimensions or hyperparameters.
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string &what) : std::invalid_argument(what) {}
};

/// An operation was called in a state where it is not defined.
struct UsageError : std::logic_error {
  explicit UsageError(const std::string &what) : std::logic_error(what) {}
};

/// Token layout does not allow the requested analysis.
struct LayoutError : std::runtime_error {
  explicit LayoutError(const std::string &what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace dtp
