#pragma once

// Distances between points of the unit sphere S^n embedded in R^(n+1).
// chord(u, v) = |u - v| and arc(u, v) = arccos(u . v) are related by
// arc = 2 asin(chord / 2), so either one orders pairs identically.

#include <algorithm>
#include <cmath>
#include <string>

#include "tgan/array.hpp"

namespace tgan {

inline constexpr double kUnitTolerance = 1e-6;

template <typename Derived>
void require_unit(const Eigen::MatrixBase<Derived>& u, const char* what) {
  const double n = static_cast<double>(u.norm());
  if (std::abs(n - 1.0) > kUnitTolerance) {
    throw ContractError(std::string(what) + " is not a unit vector (norm " + std::to_string(n) + ")");
  }
}

template <typename Derived>
void require_unit_rows(const Eigen::MatrixBase<Derived>& a, const char* what) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double n = static_cast<double>(a.row(i).norm());
    if (std::abs(n - 1.0) > kUnitTolerance) {
      throw ContractError(std::string(what) + " row " + std::to_string(i) +
                          " is not a unit vector (norm " + std::to_string(n) + ")");
    }
  }
}

template <typename DU, typename DV>
void require_same_length(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v) {
  if (u.size() != v.size()) {
    throw DimensionError("sphere distance between vectors of length " + std::to_string(u.size()) +
                         " and " + std::to_string(v.size()));
  }
}

template <typename DU, typename DV>
double chord_distance(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v) {
  require_same_length(u, v);
  require_unit(u, "u");
  require_unit(v, "v");
  return static_cast<double>((u.derived().template cast<double>() -
                              v.derived().template cast<double>()).norm());
}

template <typename DU, typename DV>
double arc_distance(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v) {
  require_same_length(u, v);
  require_unit(u, "u");
  require_unit(v, "v");
  // The half-chord form stays accurate for nearly coincident points, where
  // arccos of a rounded dot product loses half the digits.
  const double chord = (u.derived().template cast<double>().reshaped() -
                        v.derived().template cast<double>().reshaped())
                           .norm();
  return 2.0 * std::asin(std::min(1.0, 0.5 * chord));
}

template <typename DU, typename DV>
double sphere_distance(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v,
                       Metric metric) {
  return metric == Metric::arc ? arc_distance(u, v) : chord_distance(u, v);
}

/// m x k matrix of metric distances between unit rows of a and unit rows of b.
/// Uses the same per-pair arithmetic as the differentiable pairwise op, so
/// values agree bit for bit with graph evaluations.
Array2d pairwise_distances(const Array2d& a, const Array2d& b, Metric metric);

}  // namespace tgan
