#include "tgan/models.hpp"

#include <cmath>

#include "tgan/sampler.hpp"

namespace tgan {

void MlpSpec::validate() const {
  if (layer_sizes.size() < 3) throw ContractError("mlp needs at least one hidden layer");
  for (int s : layer_sizes) {
    if (s < 1) throw ContractError("mlp layer sizes must be positive");
  }
  if (output == OutputTransform::l2_normalize && output_dim() < 2) {
    throw ContractError("l2_normalize output needs feature_dim >= 2, got " + std::to_string(output_dim()));
  }
}

MlpSpec ring_generator_spec(int latent_dim) {
  return {{latent_dim, 128, 128, 128, 2}, Activation::tanh, OutputTransform::linear};
}

MlpSpec ring_critic_spec(int feature_dim) {
  return {{2, 32, 32, 32, feature_dim},
          Activation::tanh,
          feature_dim > 1 ? OutputTransform::l2_normalize : OutputTransform::linear};
}

MlpSpec mnist_generator_spec(int latent_dim) {
  return {{latent_dim, 256, 512, 1024, 1024}, Activation::leaky_relu, OutputTransform::tanh};
}

MlpSpec mnist_critic_spec(int feature_dim) {
  return {{1024, 1024, 512, 256, feature_dim},
          Activation::leaky_relu,
          feature_dim > 1 ? OutputTransform::l2_normalize : OutputTransform::linear};
}

template <typename S>
MlpParams<S> build_mlp(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  MlpParams<S> out;
  for (int l = 0; l < spec.depth(); ++l) {
    const int fan_in = spec.layer_sizes[l];
    const int fan_out = spec.layer_sizes[l + 1];
    const double sd = std::sqrt(2.0 / (fan_in + fan_out));
    Array2d w(fan_in, fan_out);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = sd * rng.normal();
    out.tensors.push_back(w.cast<S>());
    out.tensors.push_back(Array2<S>::Zero(1, fan_out));
  }
  return out;
}

template <typename S>
void check_params(const MlpSpec& spec, const MlpParams<S>& params, const std::string& what) {
  if (static_cast<int>(params.tensors.size()) != 2 * spec.depth()) {
    throw DimensionError(what + ": " + std::to_string(params.tensors.size()) + " tensors, spec expects " +
                         std::to_string(2 * spec.depth()));
  }
  for (int l = 0; l < spec.depth(); ++l) {
    const Eigen::Index in = spec.layer_sizes[l], out = spec.layer_sizes[l + 1];
    const auto& w = params.weight(l);
    const auto& b = params.bias(l);
    if (w.rows() != in || w.cols() != out) {
      throw DimensionError(what + " layer " + std::to_string(l) + " weight is " + shape_str(w) +
                           ", spec expects " + std::to_string(in) + "x" + std::to_string(out));
    }
    if (b.rows() != 1 || b.cols() != out) {
      throw DimensionError(what + " layer " + std::to_string(l) + " bias is " + shape_str(b) +
                           ", spec expects 1x" + std::to_string(out));
    }
  }
}

template <typename S>
std::vector<Var<S>> bind(Graph<S>& graph, const MlpParams<S>& params, bool trainable) {
  std::vector<Var<S>> out;
  out.reserve(params.tensors.size());
  for (const auto& t : params.tensors) out.push_back(trainable ? graph.variable(t) : graph.constant(t));
  return out;
}

template <typename S>
Var<S> mlp_forward(const MlpSpec& spec, std::span<const Var<S>> params, Var<S> x) {
  if (static_cast<int>(params.size()) != 2 * spec.depth()) {
    throw DimensionError("mlp_forward: " + std::to_string(params.size()) + " parameter nodes for depth " +
                         std::to_string(spec.depth()));
  }
  if (x.cols() != spec.input_dim()) {
    throw DimensionError("mlp_forward: input has " + std::to_string(x.cols()) + " columns, spec expects " +
                         std::to_string(spec.input_dim()));
  }
  Var<S> h = x;
  for (int l = 0; l < spec.depth(); ++l) {
    h = add_rowwise_bias(matmul(h, params[2 * l]), params[2 * l + 1]);
    if (l + 1 == spec.depth()) break;
    switch (spec.activation) {
      case Activation::tanh: h = tanh(h); break;
      case Activation::leaky_relu: h = leaky_relu(h, spec.leaky_slope); break;
      case Activation::elu: h = elu(h); break;
    }
  }
  switch (spec.output) {
    case OutputTransform::linear: return h;
    case OutputTransform::tanh: return tanh(h);
    case OutputTransform::l2_normalize: {
      const auto norms = h.value().rowwise().norm();
      for (Eigen::Index i = 0; i < norms.size(); ++i) {
        const double n = static_cast<double>(norms(i));
        if (!(n > 1e-10)) {
          throw NumericError("critic feature row " + std::to_string(i) +
                             " has vanishing norm; cannot place it on the sphere");
        }
        if (!std::isfinite(n)) {
          throw NumericError("critic feature row " + std::to_string(i) + " norm overflows");
        }
      }
      return rowwise_normalize(h);
    }
  }
  return h;
}

template <typename S>
Var<S> generator_forward(const MlpSpec& spec, std::span<const Var<S>> params, Var<S> z) {
  return mlp_forward(spec, params, z);
}

template <typename S>
Var<S> critic_forward(const MlpSpec& spec, std::span<const Var<S>> params, Var<S> x) {
  spec.validate();
  return mlp_forward(spec, params, x);
}

#define TGAN_INSTANTIATE_MODELS(S)                                                     \
  template MlpParams<S> build_mlp(const MlpSpec&, std::uint64_t);                      \
  template void check_params(const MlpSpec&, const MlpParams<S>&, const std::string&); \
  template std::vector<Var<S>> bind(Graph<S>&, const MlpParams<S>&, bool);             \
  template Var<S> mlp_forward(const MlpSpec&, std::span<const Var<S>>, Var<S>);        \
  template Var<S> generator_forward(const MlpSpec&, std::span<const Var<S>>, Var<S>);  \
  template Var<S> critic_forward(const MlpSpec&, std::span<const Var<S>>, Var<S>);

TGAN_INSTANTIATE_MODELS(double)
TGAN_INSTANTIATE_MODELS(float)

#undef TGAN_INSTANTIATE_MODELS

}  // namespace tgan
