// SPDX-License-Identifier: Apache-2.0

#ifndef DDROM_CORE_HPP
#define DDROM_CORE_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddrom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Error taxonomy. The CLI maps these onto exit codes:
// configuration/usage/schema -> 2, parameter/domain -> 3, numerical -> 4.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class SchemaError : public ConfigError {
public:
  explicit SchemaError(const std::string& msg) : ConfigError(msg) {}
};

class GeometryError : public ConfigError {
public:
  explicit GeometryError(const std::string& msg) : ConfigError(msg) {}
};

class TopologyError : public ConfigError {
public:
  explicit TopologyError(const std::string& msg) : ConfigError(msg) {}
};

class ShapeError : public ConfigError {
public:
  explicit ShapeError(const std::string& msg) : ConfigError(msg) {}
};

class ParameterError : public std::runtime_error {
public:
  explicit ParameterError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

class SingularMatrixError : public NumericalError {
public:
  explicit SingularMatrixError(const std::string& msg) : NumericalError(msg) {}
};

// GMRES failure carrying the best iterate and the residual history.
class ConvergenceError : public NumericalError {
public:
  ConvergenceError(const std::string& msg, Vector best, std::vector<double> history)
      : NumericalError(msg), best_iterate(std::move(best)), residual_history(std::move(history)) {}
  Vector best_iterate;
  std::vector<double> residual_history;
};

}  // namespace ddrom

#endif
