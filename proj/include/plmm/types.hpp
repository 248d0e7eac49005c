#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace plmm {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Error hierarchy. Everything derives from std::runtime_error or
// std::invalid_argument so callers can catch coarsely.

class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InfeasibleBoundsError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace plmm
