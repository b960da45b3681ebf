#include "tgan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>

#include "tgan/losses.hpp"
#include "tgan/sphere.hpp"
#include "tgan/trainer.hpp"

namespace tgan {

// ---- ring mode coverage ------------------------------------------------------

ModeReport mode_report(const Array2d& samples, const RingSpec& spec, double coverage_frac,
                       double radius_sigmas) {
  spec.validate();
  if (samples.rows() == 0) throw ContractError("mode_report: empty sample set");
  if (samples.rows() < 100) {
    throw ContractError("mode_report: need at least 100 samples, got " + std::to_string(samples.rows()));
  }
  if (samples.cols() != 2) throw DimensionError("mode_report: samples are " + shape_str(samples) + ", want Nx2");

  const double radius = radius_sigmas * spec.sigma;
  std::vector<Eigen::Vector2d> means;
  for (int k = 0; k < spec.n_modes; ++k) means.push_back(spec.mode_mean(k));

  ModeReport r;
  r.n_samples = samples.rows();
  r.per_mode_counts.assign(static_cast<std::size_t>(spec.n_modes), 0);
  std::vector<std::vector<double>> dists(static_cast<std::size_t>(spec.n_modes));
  long hq = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const Eigen::Vector2d x(samples(i, 0), samples(i, 1));
    int best = 0;
    double best_d = (x - means[0]).norm();
    for (int k = 1; k < spec.n_modes; ++k) {
      const double d = (x - means[static_cast<std::size_t>(k)]).norm();
      if (d < best_d) {
        best = k;
        best_d = d;
      }
    }
    r.per_mode_counts[static_cast<std::size_t>(best)] += 1;
    dists[static_cast<std::size_t>(best)].push_back(best_d);
    if (best_d <= radius) ++hq;
  }
  for (int k = 0; k < spec.n_modes; ++k) {
    auto& d = dists[static_cast<std::size_t>(k)];
    const double share = static_cast<double>(d.size()) / static_cast<double>(r.n_samples);
    if (d.empty() || share < coverage_frac) continue;
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    double median = *mid;
    if (d.size() % 2 == 0) median = 0.5 * (median + *std::max_element(d.begin(), mid));
    if (median <= radius) ++r.covered_modes;
  }
  r.hq_fraction = static_cast<double>(hq) / static_cast<double>(r.n_samples);
  return r;
}

// ---- class distribution ------------------------------------------------------

ClassReport class_report_from_counts(const std::array<long, kNumClasses>& counts) {
  ClassReport r;
  r.class_counts = counts;
  long total = 0;
  for (long c : counts) {
    if (c < 0) throw ContractError("class_report: negative count");
    total += c;
  }
  if (total == 0) throw ContractError("class_report: need at least one label");
  double sq = 0.0;
  for (long c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    if (p > 0.0) r.entropy -= p * std::log(p);
    sq += (p - 1.0 / kNumClasses) * (p - 1.0 / kNumClasses);
  }
  r.l2_to_uniform = std::sqrt(sq);
  return r;
}

ClassReport class_report(std::span<const int> labels) {
  std::array<long, kNumClasses> counts{};
  for (int l : labels) {
    if (l < 0 || l >= kNumClasses) throw ContractError("class_report: label " + std::to_string(l) + " out of range");
    counts[static_cast<std::size_t>(l)] += 1;
  }
  return class_report_from_counts(counts);
}

// ---- images ------------------------------------------------------------------

Heatmap heatmap(const Array2d& samples, double lo, double hi, int grid) {
  if (samples.cols() != 2) throw DimensionError("heatmap: samples are " + shape_str(samples) + ", want Nx2");
  if (!(hi > lo) || grid < 1) throw ContractError("heatmap: bad bounds or grid");
  Heatmap h;
  h.counts.assign(static_cast<std::size_t>(grid) * grid, 0);
  const double scale = grid / (hi - lo);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const double x = samples(i, 0), y = samples(i, 1);
    if (!(x >= lo && x <= hi && y >= lo && y <= hi)) {
      ++h.dropped;
      continue;
    }
    const int col = std::min(grid - 1, static_cast<int>((x - lo) * scale));
    const int row = grid - 1 - std::min(grid - 1, static_cast<int>((y - lo) * scale));
    h.counts[static_cast<std::size_t>(row) * grid + col] += 1;
  }
  h.image.width = h.image.height = grid;
  h.image.pixels.assign(h.counts.size(), 0);
  const long max_count = *std::max_element(h.counts.begin(), h.counts.end());
  if (max_count > 0) {
    const double denom = std::log1p(static_cast<double>(max_count));
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
      h.image.pixels[k] = static_cast<std::uint8_t>(
          std::lround(255.0 * std::log1p(static_cast<double>(h.counts[k])) / denom));
    }
  }
  return h;
}

GrayImage image_grid(const Array2d& images, int n_cols, int side) {
  if (images.cols() != static_cast<Eigen::Index>(side) * side) {
    throw DimensionError("image_grid: rows have " + std::to_string(images.cols()) + " pixels, want " +
                         std::to_string(side * side));
  }
  if (n_cols < 1 || images.rows() < 1) throw ContractError("image_grid: nothing to tile");
  const int n = static_cast<int>(images.rows());
  const int n_rows = (n + n_cols - 1) / n_cols;
  GrayImage g;
  g.width = n_cols * side;
  g.height = n_rows * side;
  g.pixels.assign(static_cast<std::size_t>(g.width) * g.height, 0);
  for (int k = 0; k < n; ++k) {
    const int r0 = (k / n_cols) * side, c0 = (k % n_cols) * side;
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        const double v = std::clamp((images(k, r * side + c) + 1.0) * 127.5, 0.0, 255.0);
        g.pixels[static_cast<std::size_t>(r0 + r) * g.width + (c0 + c)] = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  return g;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw DimensionError("write_pgm: pixel buffer does not match " + std::to_string(image.width) + "x" +
                         std::to_string(image.height));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string magic;
  int maxval = 0;
  GrayImage g;
  in >> magic >> g.width >> g.height >> maxval;
  if (magic != "P5" || maxval != 255 || g.width < 1 || g.height < 1) {
    throw FormatError(path.string() + ": not an 8-bit P5 image");
  }
  in.get();
  g.pixels.resize(static_cast<std::size_t>(g.width) * g.height);
  in.read(reinterpret_cast<char*>(g.pixels.data()), static_cast<std::streamsize>(g.pixels.size()));
  if (!in) throw FormatError(path.string() + ": truncated pixel data");
  return g;
}

// ---- digit classifier --------------------------------------------------------

MlpSpec digit_classifier_spec() {
  return {{1024, 512, 256, kNumClasses}, Activation::leaky_relu, OutputTransform::linear};
}

Eigen::RowVectorXd shift_image(const Eigen::Ref<const Eigen::RowVectorXd>& image, int dx, int dy, int side) {
  if (image.size() != static_cast<Eigen::Index>(side) * side) {
    throw DimensionError("shift_image: length " + std::to_string(image.size()));
  }
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Constant(image.size(), -1.0);
  for (int r = 0; r < side; ++r) {
    const int sr = r - dy;
    if (sr < 0 || sr >= side) continue;
    for (int c = 0; c < side; ++c) {
      const int sc = c - dx;
      if (sc < 0 || sc >= side) continue;
      out(r * side + c) = image(sr * side + sc);
    }
  }
  return out;
}

namespace {

Array2f classifier_logits(const DigitClassifier& clf, const Array2d& images) {
  Graph<float> g;
  const auto p = bind(g, clf.params, false);
  return mlp_forward<float>(clf.spec, p, g.constant(images.cast<float>())).value();
}

std::vector<int> argmax_rows(const Array2f& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

std::vector<int> predict(const DigitClassifier& clf, const Array2d& images) {
  constexpr Eigen::Index kChunk = 1000;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(images.rows()));
  for (Eigen::Index s = 0; s < images.rows(); s += kChunk) {
    const auto part = argmax_rows(classifier_logits(clf, images.middleRows(s, std::min(kChunk, images.rows() - s))));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

double accuracy_of(const DigitClassifier& clf, const MnistData& data) {
  const auto pred = predict(clf, data.images);
  long hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace

DigitClassifier train_digit_classifier(const MnistData& train, const MnistData& heldout,
                                       const ClassifierConfig& config) {
  if (train.images.rows() == 0 || heldout.images.rows() == 0) {
    throw ContractError("train_digit_classifier: empty data set");
  }
  if (train.images.cols() != 1024) throw DimensionError("train_digit_classifier: want padded 32x32 images");
  if (config.epochs < 1 || config.batch_size < 1 || !(config.lr > 0.0)) {
    throw ContractError("train_digit_classifier: bad config");
  }
  DigitClassifier clf;
  clf.spec = digit_classifier_spec();
  clf.params = build_mlp<float>(clf.spec, config.seed);
  clf.min_accuracy = config.min_accuracy;

  Rng rng(config.seed);
  rng.jump();
  AdamState<float> adam;
  AdamHyper hyper{config.lr, 0.9, 0.999, 1e-8};
  const Eigen::Index n = train.images.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const int span = 2 * config.max_shift + 1;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Cosine learning-rate decay over the epochs.
    hyper.lr = 0.5 * config.lr * (1.0 + std::cos(std::numbers::pi * epoch / config.epochs));
    for (Eigen::Index i = n - 1; i > 0; --i) {
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
    }
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(config.batch_size, n - start);
      Array2d x(len, 1024);
      std::vector<int> y(static_cast<std::size_t>(len));
      for (Eigen::Index b = 0; b < len; ++b) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + b)];
        const int dx = static_cast<int>(rng.below(static_cast<std::uint64_t>(span))) - config.max_shift;
        const int dy = static_cast<int>(rng.below(static_cast<std::uint64_t>(span))) - config.max_shift;
        x.row(b) = shift_image(train.images.row(src), dx, dy);
        y[static_cast<std::size_t>(b)] = train.labels[static_cast<std::size_t>(src)];
      }
      Graph<float> g;
      const auto p = bind(g, clf.params, true);
      Var<float> loss = softmax_cross_entropy(mlp_forward<float>(clf.spec, p, g.constant(x.cast<float>())),
                                              std::span<const int>(y));
      g.backward(loss);
      std::vector<Array2f> grads;
      for (const auto& v : p) grads.push_back(v.grad());
      adam_step<float>(adam, clf.params.tensors, grads, hyper);
    }
  }
  clf.heldout_accuracy = accuracy_of(clf, heldout);
  clf.trained = true;
  return clf;
}

std::vector<int> classify_digits(const DigitClassifier& classifier, const Array2d& images) {
  if (!classifier.trained) throw ContractError("classify_digits: classifier is untrained");
  if (classifier.heldout_accuracy < classifier.min_accuracy) {
    throw ContractError("classify_digits: held-out accuracy " + std::to_string(classifier.heldout_accuracy) +
                        " is below " + std::to_string(classifier.min_accuracy));
  }
  if (images.cols() != classifier.spec.input_dim()) {
    throw DimensionError("classify_digits: images are " + shape_str(images) + ", want Nx" +
                         std::to_string(classifier.spec.input_dim()));
  }
  return predict(classifier, images);
}

double classifier_accuracy(const DigitClassifier& classifier, const MnistData& data) {
  if (!classifier.trained) throw ContractError("classifier_accuracy: classifier is untrained");
  return accuracy_of(classifier, data);
}

// ---- finite IPM witnesses ----------------------------------------------------

void DiscreteDist::validate() const {
  if (atoms.empty() || atoms.size() != probs.size()) throw ContractError("DiscreteDist: atoms and probs differ in length");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ContractError("DiscreteDist: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ContractError("DiscreteDist: probabilities sum to " + std::to_string(total));
  auto sorted = atoms;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ContractError("DiscreteDist: repeated atom");
}

double DiscreteDist::prob(int atom) const {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i] == atom) return probs[i];
  }
  return 0.0;
}

namespace {

// Objective for one assignment; d is the k x k chord table.
double ipm_objective(const std::vector<int>& assign, const std::vector<double>& p, const std::vector<double>& q,
                     const Eigen::MatrixXd& d, std::optional<double> clip) {
  const std::size_t m = assign.size();
  double total = 0.0;
  if (!clip) {
    // sum_u sum_v d(u, v) q(v) (p(u) - q(u)); exactly zero when p == q.
    for (std::size_t u = 0; u < m; ++u) {
      const double w = p[u] - q[u];
      if (w == 0.0) continue;
      double inner = 0.0;
      for (std::size_t v = 0; v < m; ++v) inner += d(assign[u], assign[v]) * q[v];
      total += w * inner;
    }
    return total;
  }
  for (std::size_t y = 0; y < m; ++y) {
    if (p[y] == 0.0) continue;
    for (std::size_t a = 0; a < m; ++a) {
      if (q[a] == 0.0) continue;
      for (std::size_t b = 0; b < m; ++b) {
        if (q[b] == 0.0) continue;
        const double t = d(assign[y], assign[a]) - d(assign[a], assign[b]);
        total += p[y] * q[a] * q[b] * std::min(t, *clip);
      }
    }
  }
  return total;
}

struct Enumeration {
  IpmResult best;
  long n_maximizers = 0;
  std::vector<std::vector<int>> maximizers;
};

Enumeration enumerate_ipm(const DiscreteDist& p, const DiscreteDist& q, int k, std::optional<double> clip,
                          bool keep_maximizers) {
  p.validate();
  q.validate();
  if (k < 2 || k > kMaxIpmGrid) {
    throw ContractError("brute_force_ipm: grid size " + std::to_string(k) + " outside [2, " +
                        std::to_string(kMaxIpmGrid) + "]");
  }
  if (clip && !(*clip > 0.0)) throw ContractError("brute_force_ipm: clip must be > 0");
  std::vector<int> atoms = p.atoms;
  atoms.insert(atoms.end(), q.atoms.begin(), q.atoms.end());
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  const std::size_t m = atoms.size();
  if (m > static_cast<std::size_t>(kMaxIpmAtoms)) {
    throw ContractError("brute_force_ipm: " + std::to_string(m) + " atoms exceeds the budget of " +
                        std::to_string(kMaxIpmAtoms));
  }
  std::vector<double> pw(m), qw(m);
  for (std::size_t i = 0; i < m; ++i) {
    pw[i] = p.prob(atoms[i]);
    qw[i] = q.prob(atoms[i]);
  }
  Eigen::MatrixXd d(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      // Exact zeros on the diagonal and exact 2 for antipodes.
      const int sep = std::abs(a - b);
      if (sep == 0) d(a, b) = 0.0;
      else if (2 * sep == k) d(a, b) = 2.0;
      else d(a, b) = 2.0 * std::sin(std::numbers::pi * sep / k);
    }
  }

  Enumeration e;
  e.best.atoms = atoms;
  std::vector<int> assign(m, 0);
  constexpr double kTie = 1e-12;
  bool first = true;
  bool done = false;
  while (!done) {
    const double v = ipm_objective(assign, pw, qw, d, clip);
    if (first || v > e.best.value + kTie) {
      e.best.value = v;
      e.best.assignment = assign;
      e.n_maximizers = 1;
      e.maximizers.clear();
      if (keep_maximizers) e.maximizers.push_back(assign);
      first = false;
    } else if (std::abs(v - e.best.value) <= kTie) {
      ++e.n_maximizers;
      if (keep_maximizers) e.maximizers.push_back(assign);
    }
    // Lexicographic odometer, last atom fastest.
    done = true;
    for (std::size_t pos = m; pos-- > 0;) {
      if (++assign[pos] < k) {
        done = false;
        break;
      }
      assign[pos] = 0;
    }
  }
  return e;
}

bool is_antipodal(const std::vector<int>& assign, int m_real, int k) {
  if (k % 2 != 0) return false;
  const int real_pt = assign[0];
  const int fake_pt = assign[static_cast<std::size_t>(m_real)];
  if ((real_pt + k / 2) % k != fake_pt) return false;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (assign[i] != (static_cast<int>(i) < m_real ? real_pt : fake_pt)) return false;
  }
  return true;
}

}  // namespace

IpmResult brute_force_ipm(const DiscreteDist& p, const DiscreteDist& q, int k, std::optional<double> clip) {
  return enumerate_ipm(p, q, k, clip, false).best;
}

AntipodalResult antipodal_optimality_check(int m_real, int m_fake, int k, std::optional<double> clip) {
  if (m_real < 1 || m_fake < 1) throw ContractError("antipodal_optimality_check: need atoms on both sides");
  DiscreteDist real, fake;
  for (int i = 0; i < m_real; ++i) {
    real.atoms.push_back(i);
    real.probs.push_back(1.0 / m_real);
  }
  for (int i = 0; i < m_fake; ++i) {
    fake.atoms.push_back(m_real + i);
    fake.probs.push_back(1.0 / m_fake);
  }
  const auto e = enumerate_ipm(real, fake, k, clip, true);
  AntipodalResult r;
  r.best = e.best;
  r.n_maximizers = e.n_maximizers;
  r.antipodal = is_antipodal(e.best.assignment, m_real, k);
  for (const auto& a : e.maximizers) {
    if (!is_antipodal(a, m_real, k)) {
      r.non_antipodal_maximizer = true;
      break;
    }
  }
  return r;
}

// ---- Gaussian toy ------------------------------------------------------------

ToyCheck toy_distance_check(double sigma1, double sigma2, long n_mc, Rng& rng) {
  if (n_mc < 10000) throw ContractError("toy_distance_check: n_mc must be >= 10000");
  ToyCheck r;
  r.analytic = toy_gaussian_triplet_distance(sigma1, sigma2);
  // Welford accumulators for the triplet term and both means.
  double mean_t = 0.0, m2_t = 0.0, mean_y = 0.0, m2_y = 0.0, mean_x = 0.0, m2_x = 0.0;
  for (long i = 0; i < n_mc; ++i) {
    const double y = sigma1 * rng.normal();
    const double x1 = sigma2 * rng.normal();
    const double x2 = sigma2 * rng.normal();
    const double t = std::abs(x1 - x2) - std::abs(y - x1);
    const double n = static_cast<double>(i + 1);
    double delta = t - mean_t;
    mean_t += delta / n;
    m2_t += delta * (t - mean_t);
    delta = y - mean_y;
    mean_y += delta / n;
    m2_y += delta * (y - mean_y);
    delta = x1 - mean_x;
    mean_x += delta / n;
    m2_x += delta * (x1 - mean_x);
  }
  const double n = static_cast<double>(n_mc);
  r.mc_estimate = mean_t;
  r.std_err = std::sqrt(m2_t / (n - 1.0) / n);
  r.mean_match = mean_y - mean_x;
  r.mean_match_std_err = std::sqrt((m2_y / (n - 1.0) + m2_x / (n - 1.0)) / n);
  return r;
}

double mmd_identity_residual(const Array2d& emb_real, const Array2d& emb_fake, Metric metric) {
  const double mmd = mmd_chord_kernel(emb_real, emb_fake, metric);
  const double e_rr = mean_pairwise_distance(emb_real, emb_real, metric);
  const double e_rf = mean_pairwise_distance(emb_real, emb_fake, metric);
  const auto lt = triplet_objective_value(emb_real, emb_fake,
                                          product_triplets(static_cast<int>(emb_fake.rows()),
                                                           static_cast<int>(emb_real.rows())),
                                          metric);
  return std::abs(mmd - ((e_rr - e_rf) - lt.total));
}

}  // namespace tgan
