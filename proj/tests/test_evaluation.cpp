#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>

#include "tgan/evaluation.hpp"
#include "tgan/losses.hpp"
#include "tgan/trainer.hpp"

using namespace tgan;
namespace fs = std::filesystem;

// ---- mode report --------------------------------------------------------------

TEST(ModeReport, AllAtModeZero) {
  RingSpec spec;
  Array2d s(200, 2);
  s.col(0).setConstant(spec.mode_mean(0).x());
  s.col(1).setConstant(spec.mode_mean(0).y());
  const auto r = mode_report(s, spec);
  EXPECT_EQ(r.covered_modes, 1);
  EXPECT_EQ(r.hq_fraction, 1.0);
  EXPECT_EQ(r.per_mode_counts[0], 200);
}

TEST(ModeReport, TrueRingCoversEverything) {
  RingSpec spec;
  Rng rng(1);
  const auto r = mode_report(sample_ring(spec, 10000, rng), spec);
  EXPECT_EQ(r.covered_modes, 8);
  // P(|N(0, s^2 I2)| <= 3s) = 1 - exp(-4.5) = 0.98889; allow 4 binomial SDs.
  EXPECT_GE(r.hq_fraction, 0.98889 - 4.0 * std::sqrt(0.98889 * 0.01111 / 10000));
  long total = 0;
  for (long c : r.per_mode_counts) total += c;
  EXPECT_EQ(total, 10000);
}

TEST(ModeReport, UniformSquareIsAlmostNeverHighQuality) {
  RingSpec spec;
  Rng rng(2);
  const long n = 200000;
  Array2d s(n, 2);
  for (long i = 0; i < n; ++i) {
    s(i, 0) = -2.0 + 4.0 * rng.uniform();
    s(i, 1) = -2.0 + 4.0 * rng.uniform();
  }
  const auto r = mode_report(s, spec);
  const double area = 8.0 * std::numbers::pi * 0.03 * 0.03 / 16.0;  // eight 3-sigma discs in a 4x4 square
  EXPECT_NEAR(r.hq_fraction, area, 4.0 * std::sqrt(area / n));
  EXPECT_EQ(r.covered_modes, 0);
}

TEST(ModeReport, RotationInvariance) {
  // Mode means sit at multiples of 2 pi / 8, so rotating samples by that step
  // is the same as rotating samples and means together.
  RingSpec spec;
  Rng rng(3);
  Array2d s = sample_ring(spec, 5000, rng);
  s.topRows(2500) *= 1.05;  // push half the samples off their modes
  s.middleRows(100, 300) *= 0.5;
  const double step = 2.0 * std::numbers::pi / 8.0;
  Eigen::Matrix2d rot;
  rot << std::cos(step), std::sin(step), -std::sin(step), std::cos(step);
  const auto a = mode_report(s, spec);
  const auto b = mode_report(s.matrix() * rot, spec);
  EXPECT_EQ(a.covered_modes, b.covered_modes);
  EXPECT_NEAR(a.hq_fraction, b.hq_fraction, 1e-12);
  for (int k = 0; k < 8; ++k) EXPECT_EQ(a.per_mode_counts[static_cast<std::size_t>(k)], b.per_mode_counts[static_cast<std::size_t>((k + 1) % 8)]);
}

TEST(ModeReport, Errors) {
  RingSpec spec;
  EXPECT_THROW(mode_report(Array2d(0, 2), spec), ContractError);
  EXPECT_THROW(mode_report(Array2d::Zero(50, 2), spec), ContractError);
  EXPECT_THROW(mode_report(Array2d::Zero(200, 3), spec), DimensionError);
}

// ---- class report -------------------------------------------------------------

TEST(ClassReport, UniformCounts) {
  std::array<long, 10> c;
  c.fill(7);
  const auto r = class_report_from_counts(c);
  EXPECT_NEAR(r.entropy, std::log(10.0), 1e-15);
  EXPECT_NEAR(r.l2_to_uniform, 0.0, 1e-15);
}

TEST(ClassReport, SingleClass) {
  const std::vector<int> labels(50, 3);
  const auto r = class_report(labels);
  EXPECT_EQ(r.entropy, 0.0);
  EXPECT_NEAR(r.l2_to_uniform, std::sqrt(0.9), 1e-15);
  EXPECT_EQ(r.class_counts[3], 50);
}

TEST(ClassReport, TwoOneOne) {
  const std::vector<int> labels = {0, 0, 1, 2};
  EXPECT_NEAR(class_report(labels).entropy, 1.5 * std::log(2.0), 1e-15);
}

TEST(ClassReport, PermutationInvariantAndMaximalAtUniform) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    std::array<long, 10> c{};
    for (auto& x : c) x = static_cast<long>(rng.below(20));
    c[0] += 1;
    const auto r = class_report_from_counts(c);
    std::array<long, 10> p = c;
    std::reverse(p.begin(), p.end());
    std::rotate(p.begin(), p.begin() + 3, p.end());
    EXPECT_NEAR(class_report_from_counts(p).entropy, r.entropy, 1e-14);
    EXPECT_LE(r.entropy, std::log(10.0) + 1e-15);
    const bool uniform = std::all_of(c.begin(), c.end(), [&](long x) { return x == c[0]; });
    if (!uniform) {
      EXPECT_LT(r.entropy, std::log(10.0));
    }
  }
}

TEST(ClassReport, Errors) {
  EXPECT_THROW(class_report(std::vector<int>{}), ContractError);
  EXPECT_THROW(class_report(std::vector<int>{10}), ContractError);
}

// ---- heatmap and images -------------------------------------------------------

TEST(Heatmap, OriginIsOneCenterCell) {
  const auto h = heatmap(Array2d::Zero(30, 2));
  EXPECT_EQ(h.dropped, 0);
  EXPECT_EQ(h.image.at(31, 32), 255);
  int bright = 0;
  for (auto p : h.image.pixels) bright += p > 0;
  EXPECT_EQ(bright, 1);
}

TEST(Heatmap, RingGivesEightBlobsAtModes) {
  RingSpec spec;
  Rng rng(5);
  const auto h = heatmap(sample_ring(spec, 20000, rng));
  EXPECT_EQ(h.dropped, 0);
  std::vector<std::size_t> order(h.counts.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  // Brightest cell near each mode mean.
  for (int m = 0; m < 8; ++m) {
    const auto mu = spec.mode_mean(m);
    const int col = static_cast<int>((mu.x() + 1.5) * 64 / 3.0);
    const int row = 63 - static_cast<int>((mu.y() + 1.5) * 64 / 3.0);
    long best = 0;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int r = std::clamp(row + dr, 0, 63), c = std::clamp(col + dc, 0, 63);
        best = std::max(best, h.counts[static_cast<std::size_t>(r) * 64 + c]);
      }
    }
    EXPECT_GT(best, 20000 / 8 / 4) << "mode " << m;
  }
  // Nothing lands at the centre.
  EXPECT_EQ(h.counts[31 * 64 + 32], 0);
}

TEST(Heatmap, EverythingOutOfBounds) {
  const auto h = heatmap(Array2d::Constant(5, 2, 9.0));
  EXPECT_EQ(h.dropped, 5);
  EXPECT_TRUE(std::all_of(h.image.pixels.begin(), h.image.pixels.end(), [](auto p) { return p == 0; }));
}

TEST(Images, PgmRoundTripAndGrid) {
  Array2d imgs = Array2d::Constant(3, 1024, -1.0);
  imgs(1, 0) = 1.0;
  const auto grid = image_grid(imgs, 2);
  EXPECT_EQ(grid.width, 64);
  EXPECT_EQ(grid.height, 64);
  EXPECT_EQ(grid.at(0, 32), 255);
  EXPECT_EQ(grid.at(0, 0), 0);
  const fs::path p = fs::temp_directory_path() / "tgan_eval_grid.pgm";
  write_pgm(p, grid);
  const auto back = read_pgm(p);
  EXPECT_EQ(back.width, grid.width);
  EXPECT_EQ(back.pixels, grid.pixels);
  fs::remove(p);
}

TEST(Images, ShiftFillsBackground) {
  Eigen::RowVectorXd img = Eigen::RowVectorXd::Constant(1024, -1.0);
  img(5 * 32 + 7) = 1.0;
  const auto s = shift_image(img, 2, -1);
  EXPECT_EQ(s(4 * 32 + 9), 1.0);
  EXPECT_EQ(s.sum(), -1022.0);
  EXPECT_EQ(shift_image(img, 0, 0), img);
}

// ---- classifier ---------------------------------------------------------------

TEST(Classifier, UntrainedIsContractError) {
  DigitClassifier clf;
  clf.spec = digit_classifier_spec();
  clf.params = build_mlp<float>(clf.spec, 1);
  EXPECT_THROW(classify_digits(clf, Array2d::Constant(2, 1024, -1.0)), ContractError);
  clf.trained = true;
  clf.heldout_accuracy = 0.5;
  EXPECT_THROW(classify_digits(clf, Array2d::Constant(2, 1024, -1.0)), ContractError);
}

TEST(Classifier, ArchitectureShape) {
  EXPECT_EQ(digit_classifier_spec().input_dim(), 1024);
  EXPECT_EQ(digit_classifier_spec().output_dim(), 10);
}

TEST(Classifier, ReachesAccuracyBarOnHeldOutDigits) {
  const char* dir = std::getenv("MNIST_DIR");
  if (!dir || !fs::exists(fs::path(dir) / "t10k-images-idx3-ubyte")) GTEST_SKIP() << "MNIST_DIR not set";
  const fs::path root(dir);
  const auto train = load_mnist(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte");
  const auto held = load_mnist(root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte");
  const auto clf = train_digit_classifier(train, held);
  EXPECT_GE(clf.heldout_accuracy, 0.97);
  EXPECT_EQ(classifier_accuracy(clf, held), clf.heldout_accuracy);
  // Determinism: a copy gets the same label; a blank image gets a stable one.
  Array2d two(2, 1024);
  two.row(0) = held.images.row(0);
  two.row(1) = held.images.row(0);
  const auto labels = classify_digits(clf, two);
  EXPECT_EQ(labels[0], labels[1]);
  const Array2d blank = Array2d::Constant(1, 1024, -1.0);
  EXPECT_EQ(classify_digits(clf, blank), classify_digits(clf, blank));
}

// ---- IPM witnesses ------------------------------------------------------------

TEST(Ipm, EqualDistributionsGiveExactZero) {
  const DiscreteDist p{{0, 1, 2}, {0.2, 0.3, 0.5}};
  const auto r = brute_force_ipm(p, p, 8);
  EXPECT_EQ(r.value, 0.0);
  // Ties keep the lexicographically smallest assignment.
  EXPECT_EQ(r.assignment, (std::vector<int>{0, 0, 0}));
}

TEST(Ipm, TwoPointMassesGiveTwo) {
  const auto r = brute_force_ipm({{0}, {1.0}}, {{1}, {1.0}}, 8);
  EXPECT_DOUBLE_EQ(r.value, 2.0);
  EXPECT_EQ(r.atoms, (std::vector<int>{0, 1}));
  EXPECT_EQ(std::abs(r.assignment[0] - r.assignment[1]), 4);
}

TEST(Ipm, UniformPairAgainstPointMass) {
  // E_{y~P, x~Q} d = 0.5 d(f(b), f(a)) and the intra term vanishes, so the
  // maximum is 0.5 * 2 = 1 with a and b antipodal.
  const auto r = brute_force_ipm({{0, 1}, {0.5, 0.5}}, {{0}, {1.0}}, 8);
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_EQ(r.assignment, (std::vector<int>{0, 4}));
}

TEST(Ipm, BudgetAndValidation) {
  const DiscreteDist big{{0, 1, 2, 3, 4, 5, 6}, std::vector<double>(7, 1.0 / 7)};
  EXPECT_THROW(brute_force_ipm(big, big, 8), ContractError);
  EXPECT_THROW(brute_force_ipm({{0}, {1.0}}, {{0}, {1.0}}, 13), ContractError);
  EXPECT_THROW(brute_force_ipm({{0}, {0.5}}, {{0}, {1.0}}, 8), ContractError);
  EXPECT_THROW(brute_force_ipm({{0, 0}, {0.5, 0.5}}, {{0}, {1.0}}, 8), ContractError);
}

TEST(Antipodal, TwoRealTwoFake) {
  const auto r = antipodal_optimality_check(2, 2, 8);
  EXPECT_DOUBLE_EQ(r.best.value, 2.0);
  EXPECT_TRUE(r.antipodal);
  EXPECT_FALSE(r.non_antipodal_maximizer);
  // Fakes share one grid point, reals sit opposite: 8 choices of that point.
  EXPECT_EQ(r.n_maximizers, 8);
}

TEST(Antipodal, OneRealOneFake) {
  const auto r = antipodal_optimality_check(1, 1, 8);
  EXPECT_DOUBLE_EQ(r.best.value, 2.0);
  EXPECT_TRUE(r.antipodal);
}

TEST(Antipodal, ClipSaturatesAndAdmitsOtherMaximizers) {
  const auto r = antipodal_optimality_check(2, 2, 8, 1.0);
  EXPECT_DOUBLE_EQ(r.best.value, 1.0);
  EXPECT_TRUE(r.non_antipodal_maximizer);
  EXPECT_GT(r.n_maximizers, 8);
}

// ---- toy and identity checks --------------------------------------------------

TEST(ToyCheck, EqualSigmas) {
  Rng rng(6);
  const auto t = toy_distance_check(1.0, 1.0, 100000, rng);
  EXPECT_EQ(t.analytic, 0.0);
  EXPECT_LE(std::abs(t.mc_estimate), 3.0 * t.std_err);
  EXPECT_LE(std::abs(t.mean_match), 3.0 * t.mean_match_std_err);
}

TEST(ToyCheck, DegenerateGenerator) {
  Rng rng(7);
  const auto t = toy_distance_check(0.0, 1.0, 1000000, rng);
  EXPECT_NEAR(t.analytic, std::sqrt(2.0 / std::numbers::pi) * (std::sqrt(2.0) - 1.0), 1e-15);
  EXPECT_LE(std::abs(t.mc_estimate - t.analytic), 3.0 * t.std_err);
}

TEST(ToyCheck, MeanMatchingSeesNothing) {
  Rng rng(8);
  const auto t = toy_distance_check(1.0, 2.0, 1000000, rng);
  EXPECT_LE(std::abs(t.mean_match), 3.0 * t.mean_match_std_err);
  EXPECT_LE(std::abs(t.mc_estimate - t.analytic), 3.0 * t.std_err);
  EXPECT_GT(t.analytic, 0.4);
  EXPECT_THROW(toy_distance_check(1.0, 2.0, 100, rng), ContractError);
}

TEST(MmdIdentity, ResidualVanishes) {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    Array2d r = sample_noise(6, 16, rng), f = sample_noise(9, 16, rng);
    r.matrix().rowwise().normalize();
    f.matrix().rowwise().normalize();
    EXPECT_LE(mmd_identity_residual(r, f, t % 2 ? Metric::arc : Metric::chord), 1e-9);
  }
}

TEST(Diversity, TrainedGeneratorSpreadsFakeEmbeddings) {
  // The intra-batch fake distance logged at the last step should exceed the
  // one logged at step 1. On the ring it shrinks instead: the initial
  // generator is already far wider than the ring and the generator step pulls
  // it in faster than the critic spreads the embedding.
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.steps = 1000;
  const RingSpec ring = cfg.ring;
  const auto r = train<double>(cfg, [ring](Eigen::Index n, Rng& rng) { return sample_ring(ring, n, rng); });
  ASSERT_FALSE(r.diverged);
  ASSERT_EQ(r.records.size(), 1000u);
  EXPECT_GT(r.records.back().intra_term, r.records.front().intra_term);
}
