#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tgan/losses.hpp"
#include "tgan/models.hpp"
#include "tgan/sampler.hpp"

namespace tgan {

enum class ModelKind { triplet, vanilla };
enum class DataKind { ring, mnist };
/// Arithmetic used by the networks during training. Sampling, evaluation and
/// checkpoints are always double.
enum class Precision { f64, f32 };

/// All hyperparameters of one run.
struct TrainConfig {
  ModelKind model = ModelKind::triplet;
  DataKind data = DataKind::ring;
  int batch_size = 512;
  int steps = 25000;
  double lr_g = 1e-3;
  double lr_c = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  double c = 0.5;
  int feature_dim = 16;
  Metric metric = Metric::arc;
  std::uint64_t seed = 1;
  int eval_every = 5000;
  int latent_dim = 128;
  Precision precision = Precision::f64;
  RingSpec ring;
  std::string mnist_dir;
  std::string out_dir = "runs";
  /// Record wall-clock time per step; off by default so metric streams stay
  /// bitwise reproducible.
  bool wall_clock = false;

  void validate() const;
  MlpSpec generator_spec() const;
  MlpSpec critic_spec() const;

  friend bool operator==(const TrainConfig& a, const TrainConfig& b);
};

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename S>
struct AdamState {
  std::vector<Array2<S>> m;
  std::vector<Array2<S>> v;
  long t = 0;
};

/// Bias-corrected Adam descent step, theta -= lr * m_hat / (sqrt(v_hat) + eps).
/// Moments are created on first use. Non-finite gradients raise NumericError
/// before anything is modified.
template <typename S>
void adam_step(AdamState<S>& state, std::span<Array2<S>> params, std::span<const Array2<S>> grads,
               const AdamHyper& hyper);

struct StepRecord {
  int step = 0;
  double critic_loss = 0.0;     // clipped triplet value (triplet) or d_loss (vanilla)
  double generator_loss = 0.0;  // unclipped objective (triplet) or g_loss (vanilla)
  double cross_term = 0.0;      // triplet only; 0 for vanilla
  double intra_term = 0.0;      // triplet only; 0 for vanilla
  double wall_ms = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Draws n real samples.
using RealSampler = std::function<Array2d(Eigen::Index, Rng&)>;

template <typename S>
struct TrainState {
  MlpSpec gen_spec;
  MlpSpec critic_spec;
  MlpParams<S> gen;
  MlpParams<S> critic;
};

template <typename S>
struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  /// Called after every eval_every-th step and after the last step.
  std::function<void(int step, const TrainState<S>&)> on_eval;
};

template <typename S>
struct TrainResult {
  std::vector<StepRecord> records;
  TrainState<S> state;
  bool diverged = false;
  std::string message;
};

/// Fresh networks for a config; deterministic in config.seed.
template <typename S>
TrainState<S> init_state(const TrainConfig& config);

// Single phases of one training iteration, exposed for testing. Each binds
// the other network as constants, so only its own parameters move.

/// Critic ascent on the clipped triplet objective; returns the loss before the update.
template <typename S>
double triplet_critic_update(TrainState<S>& state, AdamState<S>& adam, const TrainConfig& config,
                             const TripletBatch& triplets, const Array2<S>& x, const Array2<S>& z);

/// Generator descent on the unclipped objective; returns its terms before the update.
template <typename S>
TripletObjectiveValue triplet_generator_update(TrainState<S>& state, AdamState<S>& adam,
                                               const TrainConfig& config, const TripletBatch& triplets,
                                               const Array2<S>& x, const Array2<S>& z);

/// Discriminator descent on the logistic loss; returns d_loss before the update.
template <typename S>
double vanilla_critic_update(TrainState<S>& state, AdamState<S>& adam, const TrainConfig& config,
                             const Array2<S>& x, const Array2<S>& z);

/// Generator descent on the non-saturating loss; returns g_loss before the update.
template <typename S>
double vanilla_generator_update(TrainState<S>& state, AdamState<S>& adam, const TrainConfig& config,
                                const Array2<S>& z);

/// One critic ascent step on the clipped objective, then one generator descent
/// step on the unclipped objective, per iteration. On a non-finite loss or
/// gradient the run stops with the last good parameters and diverged = true.
template <typename S>
TrainResult<S> train_tripletgan(const TrainConfig& config, const RealSampler& real,
                                const TrainHooks<S>& hooks = {});

/// Same schedule with the logistic GAN losses and a scalar critic.
template <typename S>
TrainResult<S> train_vanilla(const TrainConfig& config, const RealSampler& real,
                             const TrainHooks<S>& hooks = {});

/// Dispatches on config.model.
template <typename S>
TrainResult<S> train(const TrainConfig& config, const RealSampler& real, const TrainHooks<S>& hooks = {});

/// n generator samples as doubles.
template <typename S>
Array2d sample_generator(const MlpSpec& spec, const MlpParams<S>& params, Eigen::Index n, Rng& rng);

/// Critic features of x as doubles.
template <typename S>
Array2d embed(const MlpSpec& spec, const MlpParams<S>& params, const Array2d& x);

}  // namespace tgan
