#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <stdexcept>
#include <string>

namespace tgan {

/// Dense row-major 2-D array. Every tensor in the library (samples, latent
/// codes, embeddings, parameters, gradients) is one of these.
template <typename Scalar>
using Array2 = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Array2d = Array2<double>;
using Array2f = Array2<float>;

/// Shapes of operands do not conform to an operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

template <typename Derived>
std::string shape_str(const Eigen::EigenBase<Derived>& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

/// Distance on the unit sphere: straight-line chord or minor-arc geodesic.
enum class Metric { chord, arc };

inline const char* metric_name(Metric m) { return m == Metric::arc ? "arc" : "chord"; }

}  // namespace tgan
