#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace depmax {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown when a numeric routine breaks down (failed factorization,
/// non-finite gradients, diverged training loss). Carries the smallest
/// pivot when the source is a positive-definite solve.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what,
                        double smallest_pivot = std::nan(""))
      : std::runtime_error(what), smallest_pivot_(smallest_pivot) {}

  double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Formats a double with 17 significant digits, enough to round-trip
/// IEEE binary64 exactly through text.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace depmax
