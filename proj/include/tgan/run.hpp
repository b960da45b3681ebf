#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tgan/config.hpp"
#include "tgan/evaluation.hpp"

namespace tgan {

inline constexpr const char* kMetricsHeader = "step,critic_loss,generator_loss,cross_term,intra_term,wall_ms";

/// One metrics.csv line (no newline); reals use 17 significant digits and the
/// C locale.
std::string metrics_row(const StepRecord& record);

/// 17 significant digits, C locale.
std::string format_real(double value);

/// config.mnist_dir if set, else $MNIST_DIR; throws ConfigError when neither is.
std::filesystem::path resolve_mnist_dir(const TrainConfig& config);

/// Loads `<dir>/<split>-images-idx3-ubyte` and the matching labels; split is
/// "train" or "t10k".
MnistData load_mnist_split(const std::filesystem::path& dir, const std::string& split);

/// Real-data sampler for the config's data set. MNIST images are loaded once.
RealSampler make_real_sampler(const TrainConfig& config);

struct RunOutcome {
  std::filesystem::path dir;
  std::vector<StepRecord> records;
  TrainState<double> state;  // final parameters, widened to double
  bool diverged = false;
  std::string message;
};

/// Trains one config into `dir`: manifest.txt (written before the first step
/// and finalized at the end), metrics.csv, a heatmap_<step>.pgm (ring) or
/// samples_<step>.pgm (MNIST) at each evaluation, and final.ckpt. A diverged
/// run keeps its partial metrics and checkpoints the last good parameters.
/// Progress lines go to `log` when given.
RunOutcome run_training(const TrainConfig& config, const std::filesystem::path& dir, std::ostream* log = nullptr);

void save_checkpoint(const std::filesystem::path& path, const TrainState<double>& state);
/// Parameters shaped by config; a shape mismatch raises DimensionError naming
/// both shapes.
TrainState<double> load_checkpoint(const std::filesystem::path& path, const TrainConfig& config);

/// Seed of the fixed latent stream used for every evaluation of a run.
std::uint64_t eval_seed(const TrainConfig& config);

/// Mode report of n generator samples drawn from the evaluation stream.
ModeReport evaluate_ring(const TrainState<double>& state, const TrainConfig& config, long n);

/// Class report of n generator samples labelled by the classifier.
ClassReport evaluate_mnist(const TrainState<double>& state, const TrainConfig& config,
                           const DigitClassifier& classifier, long n);

void write_mode_report_csv(const std::filesystem::path& path, const ModeReport& report);
void write_class_report_csv(const std::filesystem::path& path, const ClassReport& report);

}  // namespace tgan
