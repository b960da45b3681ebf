#include "tgan/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

namespace tgan {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  for (auto& w : s_) w = splitmix64(seed);
}

Rng Rng::from_state(const std::array<std::uint64_t, 4>& state) {
  if (state == std::array<std::uint64_t, 4>{}) throw ContractError("Rng: all-zero state");
  Rng r;
  r.s_ = state;
  return r;
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ContractError("Rng::below(0)");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = next();
    if (x >= threshold) return x % n;
  }
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

void Rng::jump() {
  static constexpr std::uint64_t kJump[] = {0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL,
                                            0xa9582618e03fc9aaULL, 0x39abdc4529b1661cULL};
  std::array<std::uint64_t, 4> acc{};
  for (std::uint64_t word : kJump) {
    for (int b = 0; b < 64; ++b) {
      if (word & (std::uint64_t{1} << b)) {
        for (int i = 0; i < 4; ++i) acc[i] ^= s_[i];
      }
      next();
    }
  }
  s_ = acc;
  has_spare_ = false;
}

Rng Rng::split() {
  Rng child = *this;
  jump();
  return child;
}

// ---- ring --------------------------------------------------------------------

void RingSpec::validate() const {
  if (n_modes < 1) throw ContractError("ring: n_modes must be >= 1");
  if (!(radius > 0.0)) throw ContractError("ring: radius must be > 0");
  if (!(sigma > 0.0)) throw ContractError("ring: sigma must be > 0");
}

Eigen::Vector2d RingSpec::mode_mean(int k) const {
  const double angle = 2.0 * std::numbers::pi * k / n_modes;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

Array2d sample_ring(const RingSpec& spec, Eigen::Index n, Rng& rng) {
  spec.validate();
  if (n < 1) throw ContractError("sample_ring: need at least one sample");
  Array2d out(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n_modes)));
    const Eigen::Vector2d mu = spec.mode_mean(k);
    const double dx = rng.normal();
    const double dy = rng.normal();
    out(i, 0) = mu.x() + spec.sigma * dx;
    out(i, 1) = mu.y() + spec.sigma * dy;
  }
  return out;
}

Array2d sample_noise(Eigen::Index n, Eigen::Index dim, Rng& rng) {
  if (n < 1 || dim < 1) throw ContractError("sample_noise: n and dim must be >= 1");
  Array2d out(n, dim);
  for (Eigen::Index k = 0; k < out.size(); ++k) out.data()[k] = rng.normal();
  return out;
}

Array2d sample_rows(const Array2d& data, Eigen::Index n, Rng& rng) {
  if (data.rows() == 0) throw ContractError("sample_rows: empty data set");
  Array2d out(n, data.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = data.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(data.rows()))));
  }
  return out;
}

// ---- triplets ----------------------------------------------------------------

TripletBatch make_triplets(int batch) {
  if (batch < 2) {
    throw ContractError("make_triplets: triplet loss needs two fake samples, got batch " +
                        std::to_string(batch));
  }
  TripletBatch t;
  t.reserve(static_cast<std::size_t>(batch) * static_cast<std::size_t>(batch - 1));
  for (int i = 0; i < batch; ++i) {
    for (int j = 0; j < batch; ++j) {
      if (i != j) t.push_back({i, j, i});
    }
  }
  return t;
}

TripletBatch product_triplets(int n_fake, int n_real) {
  if (n_fake < 1 || n_real < 1) throw ContractError("product_triplets: empty batch");
  TripletBatch t;
  t.reserve(static_cast<std::size_t>(n_fake) * n_fake * n_real);
  for (int i = 0; i < n_fake; ++i) {
    for (int j = 0; j < n_fake; ++j) {
      for (int k = 0; k < n_real; ++k) t.push_back({i, j, k});
    }
  }
  return t;
}

// ---- MNIST -------------------------------------------------------------------

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off, const std::filesystem::path& p) {
  if (off + 4 > b.size()) throw FormatError(p.string() + ": truncated header");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

MnistData load_mnist(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  if (const auto magic = be32(img, 0, images_path); magic != 2051) {
    throw FormatError(images_path.string() + ": bad magic " + std::to_string(magic) + " (want 2051)");
  }
  if (const auto magic = be32(lab, 0, labels_path); magic != 2049) {
    throw FormatError(labels_path.string() + ": bad magic " + std::to_string(magic) + " (want 2049)");
  }
  const std::size_t n = be32(img, 4, images_path);
  const int rows = static_cast<int>(be32(img, 8, images_path));
  const int cols = static_cast<int>(be32(img, 12, images_path));
  const std::size_t n_labels = be32(lab, 4, labels_path);
  if (n != n_labels) {
    throw FormatError("image count " + std::to_string(n) + " != label count " + std::to_string(n_labels));
  }
  const std::size_t pixels = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (img.size() < 16 + n * pixels) throw FormatError(images_path.string() + ": truncated pixel data");
  if (lab.size() < 8 + n) throw FormatError(labels_path.string() + ": truncated label data");

  const int prow = rows + 2 * kMnistPad;
  const int pcol = cols + 2 * kMnistPad;
  MnistData out;
  out.rows = rows;
  out.cols = cols;
  out.images = Array2d::Constant(static_cast<Eigen::Index>(n), prow * pcol, -1.0);
  out.labels.assign(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint8_t* src = img.data() + 16 + k * pixels;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        out.images(static_cast<Eigen::Index>(k), (r + kMnistPad) * pcol + (c + kMnistPad)) =
            src[r * cols + c] / 127.5 - 1.0;
      }
    }
  }
  for (auto l : out.labels) {
    if (l > 9) throw FormatError(labels_path.string() + ": label " + std::to_string(l) + " > 9");
  }
  return out;
}

std::vector<std::uint8_t> unpad_mnist_image(const Eigen::Ref<const Eigen::RowVectorXd>& padded,
                                            int rows, int cols) {
  const int pcol = cols + 2 * kMnistPad;
  if (padded.size() != static_cast<Eigen::Index>(rows + 2 * kMnistPad) * pcol) {
    throw DimensionError("unpad_mnist_image: length " + std::to_string(padded.size()) +
                         " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<std::uint8_t> out(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = padded((r + kMnistPad) * pcol + (c + kMnistPad));
      out[static_cast<std::size_t>(r) * cols + c] =
          static_cast<std::uint8_t>(std::lround(std::clamp((v + 1.0) * 127.5, 0.0, 255.0)));
    }
  }
  return out;
}

}  // namespace tgan
