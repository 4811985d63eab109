#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace skewopt {

/// Small dense matrices and vectors with at most three rows; no heap allocation.
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
/// Basis gradients of a simplex: dim + 1 rows, dim columns.
using GradMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 3>;

/// Coordinates are always stored with three components; unused trailing
/// components are zero for 2-D meshes.
using Point = std::array<double, 3>;

/// Bad input: wrong dimensions, violated preconditions, malformed files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed: singular system, non-convergence, empty mesh.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace skewopt
