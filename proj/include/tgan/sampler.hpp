#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tgan/array.hpp"

namespace tgan {

/// xoshiro256** seeded through splitmix64. The output stream is fully
/// specified by the seed, so runs reproduce bit for bit on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng from_state(const std::array<std::uint64_t, 4>& state);

  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  /// Advances the stream by 2^128 draws.
  void jump();
  /// Returns a copy of this generator and jumps this one past it, giving two
  /// non-overlapping streams.
  Rng split();

  const std::array<std::uint64_t, 4>& state() const { return s_; }

 private:
  Rng() = default;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Gaussian mixture with modes spaced evenly on a circle.
struct RingSpec {
  int n_modes = 8;
  double radius = 1.0;
  double sigma = 0.01;

  void validate() const;
  /// Mean of mode k, at angle 2 pi k / n_modes.
  Eigen::Vector2d mode_mean(int k) const;
};

/// n x 2 samples; per row a uniformly chosen mode (drawn first), then the
/// two Gaussian offsets.
Array2d sample_ring(const RingSpec& spec, Eigen::Index n, Rng& rng);

/// n x dim i.i.d. standard normal entries, filled row-major.
Array2d sample_noise(Eigen::Index n, Eigen::Index dim, Rng& rng);

/// n rows drawn uniformly with replacement from data.
Array2d sample_rows(const Array2d& data, Eigen::Index n, Rng& rng);

/// (anchor fake, positive fake, negative real) indices into a fake batch and
/// a real batch.
struct Triplet {
  int fake_i = 0;
  int fake_j = 0;
  int real_i = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

using TripletBatch = std::vector<Triplet>;

/// All B(B-1) triplets (i, j, i) with i != j, ordered by i then j.
TripletBatch make_triplets(int batch);

/// Every (i, j, k) over n_fake x n_fake x n_real, including i == j. The
/// resulting objective estimates both expectations with V-statistics.
TripletBatch product_triplets(int n_fake, int n_real);

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMnistPad = 2;

/// Images padded with raw zero pixels, scaled from [0, 255] to [-1, 1] and
/// flattened row-major; labels in [0, 9].
struct MnistData {
  Array2d images;
  std::vector<std::uint8_t> labels;
  int rows = 0;  // unpadded image height
  int cols = 0;  // unpadded image width
};

/// Reads an IDX3 image file (magic 2051) and IDX1 label file (magic 2049).
MnistData load_mnist(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path);

/// Inverse of the padding and scaling applied by load_mnist.
std::vector<std::uint8_t> unpad_mnist_image(const Eigen::Ref<const Eigen::RowVectorXd>& padded,
                                            int rows, int cols);

}  // namespace tgan
