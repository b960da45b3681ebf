#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tgan/autodiff.hpp"

namespace tgan {

enum class Activation { tanh, leaky_relu, elu };
enum class OutputTransform { linear, tanh, l2_normalize };

/// Fully connected network: layer_sizes = {input, hidden..., output}; every
/// hidden layer applies `activation`, the last layer is affine followed by
/// `output`.
struct MlpSpec {
  std::vector<int> layer_sizes;
  Activation activation = Activation::tanh;
  OutputTransform output = OutputTransform::linear;
  double leaky_slope = 0.2;

  void validate() const;
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  /// Number of affine layers.
  int depth() const { return static_cast<int>(layer_sizes.size()) - 1; }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

// Architectures for the two benchmark problems.
MlpSpec ring_generator_spec(int latent_dim = 128);
/// feature_dim > 1 gives a sphere-valued critic; feature_dim == 1 a logit.
MlpSpec ring_critic_spec(int feature_dim);
MlpSpec mnist_generator_spec(int latent_dim = 128);
MlpSpec mnist_critic_spec(int feature_dim);

/// Weights and biases, stored as {W0, b0, W1, b1, ...}; W_l is fan_in x fan_out
/// and b_l is 1 x fan_out.
template <typename S>
struct MlpParams {
  std::vector<Array2<S>> tensors;

  Array2<S>& weight(int l) { return tensors.at(2 * l); }
  Array2<S>& bias(int l) { return tensors.at(2 * l + 1); }
  const Array2<S>& weight(int l) const { return tensors.at(2 * l); }
  const Array2<S>& bias(int l) const { return tensors.at(2 * l + 1); }

  bool all_finite() const {
    for (const auto& t : tensors) {
      if (!t.allFinite()) return false;
    }
    return true;
  }

  template <typename T>
  MlpParams<T> cast() const {
    MlpParams<T> out;
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<T>());
    return out;
  }
};

/// Glorot-normal weights, N(0, 2 / (fan_in + fan_out)); zero biases. The
/// draws are made in double precision, so every Scalar sees the same values.
template <typename S>
MlpParams<S> build_mlp(const MlpSpec& spec, std::uint64_t seed);

/// Checks tensor count and every shape against spec; errors name both shapes.
template <typename S>
void check_params(const MlpSpec& spec, const MlpParams<S>& params, const std::string& what);

/// Puts the parameters on a graph, as variables or constants.
template <typename S>
std::vector<Var<S>> bind(Graph<S>& graph, const MlpParams<S>& params, bool trainable);

template <typename S>
Var<S> mlp_forward(const MlpSpec& spec, std::span<const Var<S>> params, Var<S> x);

template <typename S>
Var<S> generator_forward(const MlpSpec& spec, std::span<const Var<S>> params, Var<S> z);

/// Critic features. With an l2_normalize output every row is a unit vector;
/// rows whose pre-normalization norm vanishes raise NumericError instead of
/// silently leaving the sphere.
template <typename S>
Var<S> critic_forward(const MlpSpec& spec, std::span<const Var<S>> params, Var<S> x);

}  // namespace tgan
