#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace chiralfilm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rejected input: bad configuration, out-of-budget thickness, grid mismatch.
/// The CLI maps it to exit code 1.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite energies, failed projections and similar numerical breakdowns.
/// The CLI maps it to exit code 2.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Skew matrix [a]x with [a]x w = a x w.
inline Mat3 cross_matrix(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return m;
}

}  // namespace chiralfilm
