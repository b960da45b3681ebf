#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tgan/losses.hpp"
#include "tgan/sphere.hpp"

using namespace tgan;
using std::numbers::pi;

namespace {

Array2d unit_rows(Eigen::Index n, Eigen::Index dim, Rng& rng) {
  Array2d a = sample_noise(n, dim, rng);
  for (Eigen::Index i = 0; i < n; ++i) a.row(i).normalize();
  return a;
}

Array2d on_circle(std::initializer_list<double> angles) {
  Array2d a(static_cast<Eigen::Index>(angles.size()), 2);
  Eigen::Index i = 0;
  for (double t : angles) {
    a(i, 0) = std::cos(t);
    a(i, 1) = std::sin(t);
    ++i;
  }
  return a;
}

Array2d fill_rows(Eigen::Index n, std::initializer_list<double> row) {
  Array2d a(n, static_cast<Eigen::Index>(row.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index k = 0;
    for (double v : row) a(i, k++) = v;
  }
  return a;
}

// Per-triplet loop, written against the definition.
double loop_objective(const Array2d& real, const Array2d& fake, const TripletBatch& t, Metric m) {
  double acc = 0.0;
  for (const auto& x : t) {
    acc += sphere_distance(real.row(x.real_i), fake.row(x.fake_i), m) -
           sphere_distance(fake.row(x.fake_i), fake.row(x.fake_j), m);
  }
  return acc / static_cast<double>(t.size());
}

}  // namespace

// ---- triplet objective ---------------------------------------------------------

TEST(TripletObjective, AntipodalBatchesGivePi) {
  const Array2d fake = fill_rows(4, {0, 0, 1});
  const Array2d real = fill_rows(4, {0, 0, -1});
  const auto v = triplet_objective_value(real, fake, make_triplets(4), Metric::arc);
  EXPECT_DOUBLE_EQ(v.cross_term, pi);
  EXPECT_EQ(v.intra_term, 0.0);
  EXPECT_DOUBLE_EQ(v.total, pi);
}

TEST(TripletObjective, AllEqualIsZero) {
  const Array2d x = fill_rows(3, {0.6, 0.8});
  for (Metric m : {Metric::chord, Metric::arc}) {
    EXPECT_EQ(triplet_objective_value(x, x, make_triplets(3), m).total, 0.0);
  }
}

TEST(TripletObjective, TwoByTwoHandEnumeration) {
  // reals r0 = (1,0), r1 = (0,1); fakes f0 = (0,1), f1 = (0,-1); chord metric.
  // (0,1,0): |r0 - f0| - |f0 - f1| = sqrt2 - 2;  (1,0,1): |r1 - f1| - |f1 - f0| = 2 - 2.
  Array2d real(2, 2), fake(2, 2);
  real << 1, 0, 0, 1;
  fake << 0, 1, 0, -1;
  const auto v = triplet_objective_value(real, fake, make_triplets(2), Metric::chord);
  EXPECT_NEAR(v.cross_term, (std::sqrt(2.0) + 2.0) / 2.0, 1e-15);
  EXPECT_NEAR(v.intra_term, 2.0, 1e-15);
  EXPECT_NEAR(v.total, (std::sqrt(2.0) - 2.0) / 2.0, 1e-15);
  EXPECT_EQ(v.total, v.cross_term - v.intra_term);
}

TEST(TripletObjective, MatchesLoopOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index b = 2 + trial % 7;
    const Array2d real = unit_rows(b, 5, rng), fake = unit_rows(b, 5, rng);
    const auto t = make_triplets(static_cast<int>(b));
    for (Metric m : {Metric::chord, Metric::arc}) {
      EXPECT_NEAR(triplet_objective_value(real, fake, t, m).total, loop_objective(real, fake, t, m), 1e-13);
    }
  }
}

TEST(TripletObjective, Errors) {
  const Array2d x = fill_rows(2, {1, 0});
  EXPECT_THROW(triplet_objective_value(x, x, {}, Metric::arc), ContractError);
  EXPECT_THROW(triplet_objective_value(x, x, {Triplet{0, 2, 0}}, Metric::arc), ContractError);
  EXPECT_THROW(triplet_objective_value(x, x, {Triplet{0, 1, 5}}, Metric::arc), ContractError);
  EXPECT_THROW(triplet_objective_value(x, fill_rows(2, {1, 0, 0}), make_triplets(2), Metric::arc),
               DimensionError);
  EXPECT_THROW(triplet_objective_value(x, fill_rows(2, {1, 1}), make_triplets(2), Metric::arc),
               ContractError);
}

// ---- clipped critic loss -------------------------------------------------------

TEST(ClippedCritic, ClipActiveContributesCAndNoGradient) {
  Graph<double> g;
  auto real = g.variable(fill_rows(2, {0, 0, -1}));
  auto fake = g.variable(fill_rows(2, {0, 0, 1}));
  auto loss = clipped_critic_loss(real, fake, make_triplets(2), Metric::arc, ClipConfig{0.5});
  EXPECT_DOUBLE_EQ(loss.item(), 0.5);
  g.backward(loss);
  EXPECT_TRUE((real.grad().array() == 0.0).all());
  EXPECT_TRUE((fake.grad().array() == 0.0).all());
}

TEST(ClippedCritic, ClipInactivePassesFullGradient) {
  // Fakes 0.3 rad apart and each real sits on its fake: every triplet is -0.3.
  const Array2d real = on_circle({0.0, 0.3}), fake = on_circle({0.0, 0.3});
  Graph<double> g1, g2;
  auto r1 = g1.variable(real), f1 = g1.variable(fake);
  auto clipped = clipped_critic_loss(r1, f1, make_triplets(2), Metric::arc, ClipConfig{0.5});
  auto r2 = g2.variable(real), f2 = g2.variable(fake);
  auto plain = generator_loss(r2, f2, make_triplets(2), Metric::arc);
  EXPECT_NEAR(clipped.item(), -0.3, 1e-12);
  g1.backward(clipped);
  g2.backward(plain);
  EXPECT_TRUE(f1.grad() == f2.grad());
  EXPECT_TRUE(r1.grad() == r2.grad());
  EXPECT_GT(f1.grad().array().abs().maxCoeff(), 0.1);
}

TEST(ClippedCritic, EqualsHingeForm) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Array2d real = unit_rows(6, 4, rng), fake = unit_rows(6, 4, rng);
    const double c = 0.05 + 3.0 * rng.uniform();
    Graph<double> g;
    auto er = g.constant(real), ef = g.constant(fake);
    const auto t = make_triplets(6);
    const auto terms = triplet_objective(er, ef, t, Metric::arc);
    const Eigen::ArrayXXd a = terms.per_triplet.value().array();
    const double clipped = clipped_critic_loss(er, ef, t, Metric::arc, ClipConfig{c}).item();
    const double hinge = c - (c - a).max(0.0).mean();
    EXPECT_NEAR(clipped, hinge, 1e-12);
    EXPECT_NEAR(clipped + (c - a).max(0.0).mean(), c, 1e-12);
  }
}

TEST(ClippedCritic, RejectsNonPositiveC) {
  Graph<double> g;
  auto x = g.constant(fill_rows(2, {1, 0}));
  EXPECT_THROW(clipped_critic_loss(x, x, make_triplets(2), Metric::arc, ClipConfig{0.0}), ContractError);
  EXPECT_THROW(clipped_critic_loss(x, x, make_triplets(2), Metric::arc, ClipConfig{-1.0}), ContractError);
}

// ---- generator loss ------------------------------------------------------------

TEST(GeneratorLoss, IsTheObjectiveTotal) {
  Rng rng(13);
  const Array2d real = unit_rows(5, 3, rng), fake = unit_rows(5, 3, rng);
  Graph<double> g;
  auto er = g.constant(real), ef = g.constant(fake);
  const auto t = make_triplets(5);
  EXPECT_EQ(generator_loss(er, ef, t, Metric::arc).item(), triplet_objective(er, ef, t, Metric::arc).total.item());
}

TEST(GeneratorLoss, IntraGradientPushesFakesApart) {
  Array2d x0(1, 3), x1(1, 3);
  x0 << 1.0, 0.2, 0.1;
  x1 << 0.3, 1.0, -0.2;
  x0.normalize();
  x1.normalize();
  const MultiArgFn intra = [](Graph<double>&, std::span<const Var<double>> v) {
    Var<double> a = rowwise_normalize(v[0]), b = rowwise_normalize(v[1]);
    return mean_all(pairwise_row_distance(a, b, Metric::chord));
  };
  EXPECT_LE(grad_check(intra, {x0, x1}, 1e-6), 1e-6);

  Graph<double> g;
  auto v0 = g.variable(x0), v1 = g.variable(x1);
  const Var<double> args[] = {v0, v1};
  g.backward(intra(g, args));
  // Ascending the distance moves x0 away from x1.
  EXPECT_LT(v0.grad().cwiseProduct(x1 - x0).sum(), 0.0);
  // Descending the generator loss, which subtracts the intra term, does the same.
  Graph<double> h;
  auto r = h.constant(fill_rows(2, {0, 0, 1}));
  auto f = h.variable((Array2d(2, 3) << x0, x1).finished());
  h.backward(generator_loss(r, rowwise_normalize(f), make_triplets(2), Metric::chord));
  const Array2d step = -f.grad();
  EXPECT_LT(step.row(0).cwiseProduct(x1 - x0).sum(), 0.0);
  EXPECT_LT(step.row(1).cwiseProduct(x0 - x1).sum(), 0.0);
}

TEST(GeneratorLoss, SymmetricSaddleHasNoRealGradient) {
  // Fakes at the poles, one real on the equator shared by both triplets: the
  // two cross distances pull the real toward opposite poles and cancel.
  const Array2d real = fill_rows(1, {1, 0, 0});
  const TripletBatch triplets = {Triplet{0, 1, 0}, Triplet{1, 0, 0}};
  Array2d fake(2, 3);
  fake << 0, 0, 1, 0, 0, -1;
  for (Metric m : {Metric::chord, Metric::arc}) {
    const MultiArgFn fn = [&](Graph<double>& g, std::span<const Var<double>> v) {
      return generator_loss(rowwise_normalize(v[0]), g.constant(fake), triplets, m);
    };
    Graph<double> g;
    auto r = g.variable(real);
    const Var<double> args[] = {r};
    g.backward(fn(g, args));
    EXPECT_LT(r.grad().array().abs().maxCoeff(), 1e-10);
    // Central differences agree that the point is stationary.
    for (Eigen::Index k = 0; k < real.size(); ++k) {
      Array2d hi = real, lo = real;
      hi.data()[k] += 1e-6;
      lo.data()[k] -= 1e-6;
      Graph<double> gh, gl;
      const Var<double> ah[] = {gh.variable(hi)}, al[] = {gl.variable(lo)};
      const double fd = (fn(gh, ah).item() - fn(gl, al).item()) / 2e-6;
      EXPECT_NEAR(fd, 0.0, 1e-8);
    }
  }
}

// ---- vanilla baseline ----------------------------------------------------------

TEST(Vanilla, ZeroLogits) {
  Graph<double> g;
  auto l = vanilla_gan_losses(g.constant(Array2d::Zero(4, 1)), g.constant(Array2d::Zero(3, 1)));
  EXPECT_NEAR(l.d_loss.item(), 2.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(l.g_loss.item(), std::log(2.0), 1e-15);
}

TEST(Vanilla, PerfectDiscriminatorLimit) {
  Graph<double> g;
  auto l = vanilla_gan_losses(g.constant(Array2d::Constant(4, 1, 800.0)), g.constant(Array2d::Constant(4, 1, -800.0)));
  EXPECT_GE(l.d_loss.item(), 0.0);
  EXPECT_LT(l.d_loss.item(), 1e-300);
  EXPECT_NEAR(l.g_loss.item(), 800.0, 1e-12);
}

TEST(Vanilla, MatchesScalarLoop) {
  Rng rng(14);
  const Array2d dr = 4.0 * sample_noise(9, 1, rng), df = 4.0 * sample_noise(7, 1, rng);
  Graph<double> g;
  auto l = vanilla_gan_losses(g.constant(dr), g.constant(df));
  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  double d = 0.0, gl = 0.0;
  for (Eigen::Index i = 0; i < dr.rows(); ++i) d -= std::log(sigmoid(dr(i))) / 9.0;
  for (Eigen::Index i = 0; i < df.rows(); ++i) {
    d -= std::log(1.0 - sigmoid(df(i))) / 7.0;
    gl -= std::log(sigmoid(df(i))) / 7.0;
  }
  EXPECT_NEAR(l.d_loss.item(), d, 1e-12);
  EXPECT_NEAR(l.g_loss.item(), gl, 1e-12);
}

TEST(Vanilla, ShapeErrors) {
  Graph<double> g;
  EXPECT_THROW(vanilla_gan_losses(g.constant(Array2d::Zero(4, 2)), g.constant(Array2d::Zero(4, 1))),
               DimensionError);
}

// ---- MMD form ------------------------------------------------------------------

TEST(Mmd, IdenticalBatchesAreZero) {
  Rng rng(15);
  const Array2d a = unit_rows(10, 6, rng);
  EXPECT_EQ(mmd_chord_kernel(a, a, Metric::chord), 0.0);
  EXPECT_EQ(mmd_chord_kernel(a, a, Metric::arc), 0.0);
}

TEST(Mmd, EqualsCrossGapMinusTripletObjective) {
  Rng rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const Array2d real = unit_rows(7, 4, rng), fake = unit_rows(7, 4, rng);
    for (Metric m : {Metric::chord, Metric::arc}) {
      const double e_rr = mean_pairwise_distance(real, real, m);
      const double e_rf = mean_pairwise_distance(real, fake, m);
      const double lt = triplet_objective_value(real, fake, product_triplets(7, 7), m).total;
      EXPECT_NEAR(mmd_chord_kernel(real, fake, m), (e_rr - e_rf) - lt, 1e-9);
    }
  }
}

TEST(Mmd, SinglePointsGiveMinusTwiceTheDistance) {
  const Array2d a = on_circle({0.0}), b = on_circle({1.1});
  EXPECT_NEAR(mmd_chord_kernel(a, b, Metric::arc), -2.2, 1e-15);
  EXPECT_THROW(mmd_chord_kernel(Array2d(0, 2), b, Metric::arc), ContractError);
}

// ---- analytic toy distance -----------------------------------------------------

namespace {

struct McResult {
  double mean, se;
};

// E|Y - X1| - E|X1 - X2| with X ~ N(0, s2^2), Y ~ N(0, s1^2).
McResult toy_monte_carlo(double s1, double s2, int n, Rng& rng) {
  double mean = 0.0, m2 = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double x1 = s2 * rng.normal(), x2 = s2 * rng.normal(), y = s1 * rng.normal();
    const double t = std::abs(y - x1) - std::abs(x1 - x2);
    const double delta = t - mean;
    mean += delta / k;
    m2 += delta * (t - mean);
  }
  return {mean, std::sqrt(m2 / (n - 1) / n)};
}

}  // namespace

TEST(ToyDistance, EqualSigmasGiveZero) { EXPECT_EQ(toy_gaussian_triplet_distance(1.0, 1.0), 0.0); }

TEST(ToyDistance, DegenerateGeneratorAgainstMonteCarlo) {
  const double analytic = toy_gaussian_triplet_distance(0.0, 1.0);
  EXPECT_NEAR(analytic, std::sqrt(2.0 / pi) * (std::sqrt(2.0) - 1.0), 1e-15);
  EXPECT_NEAR(analytic, 0.3305, 1e-4);
  Rng rng(17);
  const auto mc = toy_monte_carlo(0.0, 1.0, 1000000, rng);
  EXPECT_LE(std::abs(std::abs(mc.mean) - analytic), 3.0 * mc.se);
}

TEST(ToyDistance, UnitVersusTwoAgainstMonteCarlo) {
  const double analytic = toy_gaussian_triplet_distance(1.0, 2.0);
  EXPECT_NEAR(analytic, std::sqrt(2.0 / pi) * (2.0 * std::sqrt(2.0) - std::sqrt(5.0)), 1e-15);
  EXPECT_NEAR(analytic, 0.4726, 1e-4);
  Rng rng(18);
  const auto mc = toy_monte_carlo(1.0, 2.0, 1000000, rng);
  EXPECT_LE(std::abs(std::abs(mc.mean) - analytic), 3.0 * mc.se);
}

TEST(ToyDistance, RejectsOrderedSigmasViolation) {
  EXPECT_THROW(toy_gaussian_triplet_distance(2.0, 1.0), ContractError);
  EXPECT_THROW(toy_gaussian_triplet_distance(-1.0, 1.0), ContractError);
}

// ---- properties ----------------------------------------------------------------

TEST(LossProperty, RotationInvariance) {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const Array2d real = unit_rows(5, 4, rng), fake = unit_rows(5, 4, rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(sample_noise(4, 4, rng)).householderQ();
    const Array2d rr = real * q, rf = fake * q;
    for (Metric m : {Metric::chord, Metric::arc}) {
      EXPECT_NEAR(triplet_objective_value(real, fake, make_triplets(5), m).total,
                  triplet_objective_value(rr, rf, make_triplets(5), m).total, 1e-12);
    }
  }
}

TEST(LossProperty, ArcTotalBounded) {
  Rng rng(20);
  for (int trial = 0; trial < 200; ++trial) {
    const Array2d real = unit_rows(4, 3, rng), fake = unit_rows(4, 3, rng);
    const double v = triplet_objective_value(real, fake, make_triplets(4), Metric::arc).total;
    EXPECT_GE(v, -pi);
    EXPECT_LE(v, pi);
  }
}

TEST(LossProperty, IdenticalMultisetWithSymmetricTripletsIsZero) {
  Rng rng(21);
  const Array2d a = unit_rows(8, 5, rng);
  Array2d shuffled = a;
  shuffled.row(0).swap(shuffled.row(5));
  for (Metric m : {Metric::chord, Metric::arc}) {
    EXPECT_NEAR(triplet_objective_value(a, shuffled, product_triplets(8, 8), m).total, 0.0, 1e-15);
  }
}

TEST(LossProperty, MatchingDistributionsAverageToZero) {
  // Real and fake drawn from one distribution: the objective over fresh
  // batches averages to zero up to sampling noise.
  Rng rng(22);
  double acc = 0.0, acc2 = 0.0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    const double v = triplet_objective_value(unit_rows(16, 3, rng), unit_rows(16, 3, rng), make_triplets(16),
                                             Metric::arc)
                         .total;
    acc += v;
    acc2 += v * v;
  }
  const double mean = acc / trials;
  const double se = std::sqrt((acc2 / trials - mean * mean) / trials);
  EXPECT_LE(std::abs(mean), 4.0 * se);
}

TEST(LossProperty, MeanMatchingIsBlindToScale) {
  // Means of N(0, 1) and N(0, 4) samples agree, while the triplet distance
  // separates the two distributions.
  Rng rng(23);
  const int n = 200000;
  double mx = 0.0, my = 0.0;
  for (int k = 0; k < n; ++k) {
    mx += 2.0 * rng.normal() / n;
    my += rng.normal() / n;
  }
  EXPECT_LT(std::abs(mx - my), 0.03);
  EXPECT_GT(toy_gaussian_triplet_distance(1.0, 2.0), 0.4);
}

TEST(LossPrecision, FloatTracksDouble) {
  Rng rng(24);
  const Array2d real = unit_rows(6, 16, rng), fake = unit_rows(6, 16, rng);
  Graph<float> g;
  auto v = triplet_objective(g.constant(real.cast<float>()), g.constant(fake.cast<float>()), make_triplets(6),
                             Metric::arc);
  EXPECT_NEAR(v.total.item(), triplet_objective_value(real, fake, make_triplets(6), Metric::arc).total, 1e-5);
}
