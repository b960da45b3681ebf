#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tgan/models.hpp"
#include "tgan/sampler.hpp"

namespace tgan {

// ---- ring mode coverage ------------------------------------------------------

struct ModeReport {
  std::vector<long> per_mode_counts;
  int covered_modes = 0;
  double hq_fraction = 0.0;
  long n_samples = 0;
};

/// Assigns each sample to its nearest mode mean. A mode is covered when it
/// receives at least coverage_frac of the samples and the median distance of
/// those samples is within radius_sigmas * sigma. hq_fraction counts samples
/// within radius_sigmas * sigma of their assigned mean.
ModeReport mode_report(const Array2d& samples, const RingSpec& spec, double coverage_frac = 0.01,
                       double radius_sigmas = 3.0);

// ---- class distribution ------------------------------------------------------

inline constexpr int kNumClasses = 10;

struct ClassReport {
  std::array<long, kNumClasses> class_counts{};
  double entropy = 0.0;        // natural log
  double l2_to_uniform = 0.0;
};

ClassReport class_report(std::span<const int> labels);
ClassReport class_report_from_counts(const std::array<long, kNumClasses>& counts);

// ---- images ------------------------------------------------------------------

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, row 0 on top

  std::uint8_t at(int row, int col) const { return pixels.at(static_cast<std::size_t>(row) * width + col); }
};

struct Heatmap {
  GrayImage image;
  std::vector<long> counts;  // grid x grid, same layout as image
  long dropped = 0;          // samples outside the bounds
};

/// 2-D histogram of the samples over [lo, hi]^2, log(1 + count) scaled so the
/// fullest cell is 255. Row 0 holds the largest y.
Heatmap heatmap(const Array2d& samples, double lo = -1.5, double hi = 1.5, int grid = 64);

/// Tiles 32x32 images in [-1, 1] into a grid with n_cols columns.
GrayImage image_grid(const Array2d& images, int n_cols, int side = 32);

void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

// ---- digit classifier --------------------------------------------------------

struct ClassifierConfig {
  int epochs = 30;
  int batch_size = 128;
  double lr = 1e-3;
  int max_shift = 2;  // random translation augmentation, pixels
  std::uint64_t seed = 7;
  double min_accuracy = 0.97;
};

struct DigitClassifier {
  MlpSpec spec;
  MlpParams<float> params;
  bool trained = false;
  double heldout_accuracy = 0.0;
  double min_accuracy = 0.97;
};

MlpSpec digit_classifier_spec();

/// Cross-entropy MLP on padded MNIST rows. Held-out accuracy is measured on
/// `heldout` after training.
DigitClassifier train_digit_classifier(const MnistData& train, const MnistData& heldout,
                                       const ClassifierConfig& config = {});

/// Argmax class per row. Throws ContractError unless the classifier was
/// trained and reached its accuracy bar.
std::vector<int> classify_digits(const DigitClassifier& classifier, const Array2d& images);

double classifier_accuracy(const DigitClassifier& classifier, const MnistData& data);

/// Translates a padded 32x32 image, filling with background (-1).
Eigen::RowVectorXd shift_image(const Eigen::Ref<const Eigen::RowVectorXd>& image, int dx, int dy,
                               int side = 32);

// ---- finite IPM witnesses ----------------------------------------------------

/// Distribution over abstract atoms, identified by integer labels.
struct DiscreteDist {
  std::vector<int> atoms;
  std::vector<double> probs;

  void validate() const;
  double prob(int atom) const;
};

inline constexpr int kMaxIpmAtoms = 6;
inline constexpr int kMaxIpmGrid = 12;

struct IpmResult {
  double value = 0.0;
  std::vector<int> atoms;       // sorted union of both supports
  std::vector<int> assignment;  // grid index per atom, same order
};

/// Max over every map from atoms to k equally spaced points on the unit
/// circle of E_{y~P, x~Q} d(f(y), f(x)) - E_{x1,x2~Q} d(f(x1), f(x2)) with the
/// chord metric. With clip, each triplet term is min(., clip) instead. Ties go
/// to the lexicographically smallest assignment.
IpmResult brute_force_ipm(const DiscreteDist& p, const DiscreteDist& q, int k,
                          std::optional<double> clip = std::nullopt);

struct AntipodalResult {
  IpmResult best;
  bool antipodal = false;   // the returned maximizer is antipodal
  long n_maximizers = 0;    // assignments within 1e-12 of the maximum
  bool non_antipodal_maximizer = false;
};

/// brute_force_ipm with P uniform on m_real atoms and Q uniform on m_fake
/// disjoint atoms; reports whether the maximizer sends every fake atom to one
/// grid point and every real atom to its antipode.
AntipodalResult antipodal_optimality_check(int m_real, int m_fake, int k,
                                           std::optional<double> clip = std::nullopt);

// ---- Gaussian toy ------------------------------------------------------------

struct ToyCheck {
  double analytic = 0.0;
  double mc_estimate = 0.0;
  double std_err = 0.0;
  double mean_match = 0.0;  // E y - E x, should vanish
  double mean_match_std_err = 0.0;
};

/// Monte Carlo estimate of E|X1 - X2| - E|Y - X1| for X ~ N(0, s2^2),
/// Y ~ N(0, s1^2), next to its closed form. Needs n_mc >= 10^4.
ToyCheck toy_distance_check(double sigma1, double sigma2, long n_mc, Rng& rng);

/// |mmd_chord_kernel - ((E_rr - E_rf) - L_t)| with L_t over all product
/// triplets.
double mmd_identity_residual(const Array2d& emb_real, const Array2d& emb_fake, Metric metric);

}  // namespace tgan
