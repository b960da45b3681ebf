#include "tgan/run.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>

#include "tgan/checkpoint.hpp"

namespace tgan {

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string metrics_row(const StepRecord& r) {
  return std::to_string(r.step) + ',' + format_real(r.critic_loss) + ',' + format_real(r.generator_loss) + ',' +
         format_real(r.cross_term) + ',' + format_real(r.intra_term) + ',' + format_real(r.wall_ms);
}

std::filesystem::path resolve_mnist_dir(const TrainConfig& config) {
  if (!config.mnist_dir.empty()) return config.mnist_dir;
  if (const char* env = std::getenv("MNIST_DIR"); env && *env) return env;
  throw ConfigError("MNIST data needs mnist_dir in the config or the MNIST_DIR environment variable", 0);
}

MnistData load_mnist_split(const std::filesystem::path& dir, const std::string& split) {
  return load_mnist(dir / (split + "-images-idx3-ubyte"), dir / (split + "-labels-idx1-ubyte"));
}

RealSampler make_real_sampler(const TrainConfig& config) {
  if (config.data == DataKind::ring) {
    return [spec = config.ring](Eigen::Index n, Rng& rng) { return sample_ring(spec, n, rng); };
  }
  auto data = std::make_shared<const MnistData>(load_mnist_split(resolve_mnist_dir(config), "train"));
  return [data](Eigen::Index n, Rng& rng) { return sample_rows(data->images, n, rng); };
}

std::uint64_t eval_seed(const TrainConfig& config) { return config.seed ^ 0x6576616c5f7a0000ull; }

// ---- checkpoints -------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const TrainState<double>& state) {
  TensorMap t;
  put_params(t, "generator", state.gen);
  put_params(t, "critic", state.critic);
  save_tensors(path, t);
}

TrainState<double> load_checkpoint(const std::filesystem::path& path, const TrainConfig& config) {
  const TensorMap t = load_tensors(path);
  TrainState<double> s;
  s.gen_spec = config.generator_spec();
  s.critic_spec = config.critic_spec();
  s.gen = take_params(t, "generator", s.gen_spec);
  s.critic = take_params(t, "critic", s.critic_spec);
  return s;
}

// ---- evaluation --------------------------------------------------------------

ModeReport evaluate_ring(const TrainState<double>& state, const TrainConfig& config, long n) {
  Rng rng(eval_seed(config));
  return mode_report(sample_generator(state.gen_spec, state.gen, n, rng), config.ring);
}

ClassReport evaluate_mnist(const TrainState<double>& state, const TrainConfig& config,
                           const DigitClassifier& classifier, long n) {
  Rng rng(eval_seed(config));
  const auto labels = classify_digits(classifier, sample_generator(state.gen_spec, state.gen, n, rng));
  return class_report(labels);
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace

void write_mode_report_csv(const std::filesystem::path& path, const ModeReport& r) {
  std::string head = "covered_modes,hq_fraction,n_samples";
  std::string row = std::to_string(r.covered_modes) + ',' + format_real(r.hq_fraction) + ',' + std::to_string(r.n_samples);
  for (std::size_t k = 0; k < r.per_mode_counts.size(); ++k) {
    head += ",mode_" + std::to_string(k);
    row += ',' + std::to_string(r.per_mode_counts[k]);
  }
  write_text(path, head + '\n' + row + '\n');
}

void write_class_report_csv(const std::filesystem::path& path, const ClassReport& r) {
  std::string head = "entropy,l2_to_uniform";
  std::string row = format_real(r.entropy) + ',' + format_real(r.l2_to_uniform);
  for (int k = 0; k < kNumClasses; ++k) {
    head += ",class_" + std::to_string(k);
    row += ',' + std::to_string(r.class_counts[static_cast<std::size_t>(k)]);
  }
  write_text(path, head + '\n' + row + '\n');
}

// ---- training run ------------------------------------------------------------

namespace {

constexpr long kHeatmapSamples = 10000;
constexpr int kImageGridSide = 8;

template <typename S>
RunOutcome run_typed(const TrainConfig& config, const std::filesystem::path& dir, std::ostream* log) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  RunManifest manifest = make_manifest(config);
  write_manifest(dir / "manifest.txt", manifest);

  const RealSampler real = make_real_sampler(config);
  std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
  if (!metrics) throw FormatError("cannot write " + (dir / "metrics.csv").string());
  metrics << kMetricsHeader << '\n';
  manifest.outputs.push_back("metrics.csv");

  TrainHooks<S> hooks;
  hooks.on_step = [&](const StepRecord& r) { metrics << metrics_row(r) << '\n'; };
  hooks.on_eval = [&](int step, const TrainState<S>& st) {
    Rng rng(eval_seed(config));
    std::string name;
    if (config.data == DataKind::ring) {
      const Array2d samples = sample_generator(st.gen_spec, st.gen, kHeatmapSamples, rng);
      name = "heatmap_" + std::to_string(step) + ".pgm";
      write_pgm(dir / name, heatmap(samples).image);
      if (log) {
        const ModeReport m = mode_report(samples, config.ring);
        *log << "step " << step << ": covered_modes " << m.covered_modes << ", hq_fraction " << m.hq_fraction
             << '\n';
      }
    } else {
      const Array2d samples = sample_generator(st.gen_spec, st.gen, kImageGridSide * kImageGridSide, rng);
      name = "samples_" + std::to_string(step) + ".pgm";
      write_pgm(dir / name, image_grid(samples, kImageGridSide));
      if (log) *log << "step " << step << '\n';
    }
    manifest.outputs.push_back(name);
  };

  TrainResult<S> result = train<S>(config, real, hooks);
  metrics.close();
  if (!metrics) throw FormatError("write failed: " + (dir / "metrics.csv").string());

  RunOutcome out;
  out.dir = dir;
  out.records = std::move(result.records);
  out.state = {result.state.gen_spec, result.state.critic_spec, result.state.gen.template cast<double>(),
               result.state.critic.template cast<double>()};
  out.diverged = result.diverged;
  out.message = result.message;

  save_checkpoint(dir / "final.ckpt", out.state);
  manifest.outputs.push_back("final.ckpt");
  manifest.finished = utc_timestamp();
  manifest.status = out.diverged ? "diverged" : "ok";
  write_manifest(dir / "manifest.txt", manifest);
  return out;
}

}  // namespace

RunOutcome run_training(const TrainConfig& config, const std::filesystem::path& dir, std::ostream* log) {
  config.validate();
  return config.precision == Precision::f64 ? run_typed<double>(config, dir, log) : run_typed<float>(config, dir, log);
}

}  // namespace tgan
