#include "tgan/sphere.hpp"

namespace tgan {

Array2d pairwise_distances(const Array2d& a, const Array2d& b, Metric metric) {
  if (a.cols() != b.cols()) {
    throw DimensionError("pairwise_distances: row lengths " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.cols()) + " differ");
  }
  require_unit_rows(a, "A");
  require_unit_rows(b, "B");
  Array2d out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double chord = (a.row(i) - b.row(j)).matrix().norm();
      out(i, j) = metric == Metric::arc ? 2.0 * std::asin(std::min(1.0, 0.5 * chord)) : chord;
    }
  }
  return out;
}

}  // namespace tgan
