#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <stdexcept>
#include <string>

namespace greytensor {

/// Small dynamic vector with inline storage for d <= 3 (no heap traffic in hot loops).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
/// Small dynamic matrix, columns are vectors (lattice bases are stored column-wise).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
/// Lattice index vector.
using IVec = Eigen::Matrix<long, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

inline constexpr int kMaxDim = 3;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] bool contains(double v) const { return v >= lo && v <= hi; }
  [[nodiscard]] double width() const { return hi - lo; }
};

}  // namespace greytensor
