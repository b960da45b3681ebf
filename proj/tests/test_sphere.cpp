#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tgan/sampler.hpp"
#include "tgan/sphere.hpp"

using namespace tgan;
using std::numbers::pi;

namespace {

Eigen::RowVectorXd e(int dim, int k, double sign = 1.0) {
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(dim);
  v(k) = sign;
  return v;
}

Eigen::RowVectorXd random_unit(int dim, Rng& rng) {
  Eigen::RowVectorXd v(dim);
  for (int k = 0; k < dim; ++k) v(k) = rng.normal();
  return v.normalized();
}

}  // namespace

TEST(Chord, Examples) {
  EXPECT_EQ(chord_distance(e(3, 0), e(3, 0)), 0.0);
  EXPECT_DOUBLE_EQ(chord_distance(e(3, 0), e(3, 0, -1.0)), 2.0);
  EXPECT_NEAR(chord_distance(e(3, 0), e(3, 1)), 1.41421356237, 1e-10);
}

TEST(Arc, Examples) {
  EXPECT_EQ(arc_distance(e(4, 2), e(4, 2)), 0.0);
  EXPECT_DOUBLE_EQ(arc_distance(e(4, 0), e(4, 0, -1.0)), pi);
  EXPECT_NEAR(arc_distance(e(4, 0), e(4, 3)), pi / 2, 1e-15);
}

TEST(Sphere, NonUnitInputReportsMeasuredNorm) {
  Eigen::RowVectorXd v(2);
  v << 3.0, 4.0;
  try {
    chord_distance(v, e(2, 0));
    FAIL() << "expected ContractError";
  } catch (const ContractError& err) {
    EXPECT_NE(std::string(err.what()).find("5"), std::string::npos) << err.what();
  }
  EXPECT_THROW(arc_distance(e(2, 0), 2.0 * e(2, 0)), ContractError);
}

TEST(Sphere, LengthMismatchIsDimensionError) {
  EXPECT_THROW(chord_distance(e(2, 0), e(3, 0)), DimensionError);
}

TEST(Pairwise, SingleRowIsZero) {
  Array2d a(1, 3);
  a.row(0) = e(3, 1);
  const Array2d d = pairwise_distances(a, a, Metric::arc);
  ASSERT_EQ(d.rows(), 1);
  ASSERT_EQ(d.cols(), 1);
  EXPECT_EQ(d(0, 0), 0.0);
}

TEST(Pairwise, AntipodeIsPi) {
  Array2d a(1, 2), b(2, 2);
  a.row(0) = e(2, 0);
  b.row(0) = e(2, 0);
  b.row(1) = e(2, 0, -1.0);
  const Array2d d = pairwise_distances(a, b, Metric::arc);
  EXPECT_EQ(d(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(d(0, 1), pi);
}

TEST(Pairwise, MatchesPerPairLoop) {
  Rng rng(4);
  Array2d a(3, 2);
  for (int i = 0; i < 3; ++i) a.row(i) = random_unit(2, rng);
  for (Metric m : {Metric::chord, Metric::arc}) {
    const Array2d d = pairwise_distances(a, a, m);
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(d(i, i), 0.0);
      for (int j = 0; j < 3; ++j) {
        EXPECT_EQ(d(i, j), d(j, i));
        // Oracle: coordinates directly.
        const double dx = a(i, 0) - a(j, 0), dy = a(i, 1) - a(j, 1);
        const double chord = std::sqrt(dx * dx + dy * dy);
        const double expect = m == Metric::chord ? chord : 2.0 * std::asin(std::min(1.0, chord / 2.0));
        EXPECT_NEAR(d(i, j), expect, 1e-9);
      }
    }
  }
}

TEST(Pairwise, RejectsNonUnitRowsAndWidthMismatch) {
  Array2d a = Array2d::Ones(2, 2);
  Array2d b(1, 3);
  b.row(0) = e(3, 0);
  EXPECT_THROW(pairwise_distances(a, a, Metric::chord), ContractError);
  Array2d u(1, 2);
  u.row(0) = e(2, 0);
  EXPECT_THROW(pairwise_distances(u, b, Metric::chord), DimensionError);
}

TEST(SphereProperty, ArcIsTwiceArcsinHalfChord) {
  Rng rng(77);
  for (int t = 0; t < 10000; ++t) {
    const int dim = 2 + t % 16;
    const auto u = random_unit(dim, rng), v = random_unit(dim, rng);
    EXPECT_NEAR(arc_distance(u, v), 2.0 * std::asin(chord_distance(u, v) / 2.0), 1e-9);
  }
}

TEST(SphereProperty, MetricsAreMonotoneEquivalent) {
  Rng rng(78);
  for (int t = 0; t < 2000; ++t) {
    const auto u = random_unit(5, rng), v1 = random_unit(5, rng), v2 = random_unit(5, rng);
    const bool chord_less = chord_distance(u, v1) < chord_distance(u, v2);
    const bool arc_less = arc_distance(u, v1) < arc_distance(u, v2);
    EXPECT_EQ(chord_less, arc_less);
  }
}

TEST(SphereProperty, TriangleInequalityAndSymmetry) {
  Rng rng(79);
  for (int t = 0; t < 2000; ++t) {
    const auto a = random_unit(4, rng), b = random_unit(4, rng), c = random_unit(4, rng);
    for (Metric m : {Metric::chord, Metric::arc}) {
      EXPECT_LE(sphere_distance(a, c, m), sphere_distance(a, b, m) + sphere_distance(b, c, m) + 1e-12);
      EXPECT_EQ(sphere_distance(a, b, m), sphere_distance(b, a, m));
      EXPECT_GE(sphere_distance(a, b, m), 0.0);
    }
  }
}
