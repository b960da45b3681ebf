#include "tgan/trainer.hpp"

#include <chrono>
#include <cmath>

namespace tgan {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ContractError("batch_size must be >= 2");
  if (steps < 1) throw ContractError("steps must be >= 1");
  if (!(lr_g > 0.0)) throw ContractError("lr_g must be > 0");
  if (!(lr_c > 0.0)) throw ContractError("lr_c must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ContractError("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ContractError("beta2 must be in [0, 1)");
  if (!(eps_adam > 0.0)) throw ContractError("eps_adam must be > 0");
  if (model == ModelKind::triplet && !(c > 0.0)) throw ContractError("c must be > 0");
  if (model == ModelKind::triplet && feature_dim < 2) throw ContractError("feature_dim must be >= 2");
  if (eval_every < 1) throw ContractError("eval_every must be >= 1");
  if (latent_dim < 1) throw ContractError("latent_dim must be >= 1");
  ring.validate();
}

MlpSpec TrainConfig::generator_spec() const {
  return data == DataKind::ring ? ring_generator_spec(latent_dim) : mnist_generator_spec(latent_dim);
}

MlpSpec TrainConfig::critic_spec() const {
  const int features = model == ModelKind::triplet ? feature_dim : 1;
  return data == DataKind::ring ? ring_critic_spec(features) : mnist_critic_spec(features);
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  return a.model == b.model && a.data == b.data && a.batch_size == b.batch_size && a.steps == b.steps &&
         a.lr_g == b.lr_g && a.lr_c == b.lr_c && a.beta1 == b.beta1 && a.beta2 == b.beta2 &&
         a.eps_adam == b.eps_adam && a.c == b.c && a.feature_dim == b.feature_dim &&
         a.metric == b.metric && a.seed == b.seed && a.eval_every == b.eval_every &&
         a.latent_dim == b.latent_dim && a.precision == b.precision && a.ring.n_modes == b.ring.n_modes &&
         a.ring.radius == b.ring.radius && a.ring.sigma == b.ring.sigma && a.mnist_dir == b.mnist_dir &&
         a.out_dir == b.out_dir && a.wall_clock == b.wall_clock;
}

template <typename S>
void adam_step(AdamState<S>& state, std::span<Array2<S>> params, std::span<const Array2<S>> grads,
               const AdamHyper& hyper) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params but " +
                         std::to_string(grads.size()) + " grads");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].rows() != grads[k].rows() || params[k].cols() != grads[k].cols()) {
      throw DimensionError("adam_step: tensor " + std::to_string(k) + " is " + shape_str(params[k]) +
                           " but its gradient is " + shape_str(grads[k]));
    }
    if (!grads[k].allFinite()) {
      throw NumericError("adam_step: non-finite gradient in tensor " + std::to_string(k) + " (" +
                         shape_str(grads[k]) + ") at step " + std::to_string(state.t + 1));
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Array2<S>::Zero(p.rows(), p.cols()));
      state.v.push_back(Array2<S>::Zero(p.rows(), p.cols()));
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: state does not match params");

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const S b1 = static_cast<S>(hyper.beta1);
  const S b2 = static_cast<S>(hyper.beta2);
  const S c1 = static_cast<S>(1.0 / (1.0 - std::pow(hyper.beta1, t)));
  const S c2 = static_cast<S>(1.0 / (1.0 - std::pow(hyper.beta2, t)));
  const S lr = static_cast<S>(hyper.lr);
  const S eps = static_cast<S>(hyper.eps);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto m = state.m[k].array();
    auto v = state.v[k].array();
    const auto g = grads[k].array();
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.square();
    params[k].array() -= lr * (m * c1) / ((v * c2).sqrt() + eps);
  }
}

template <typename S>
TrainState<S> init_state(const TrainConfig& config) {
  config.validate();
  Rng stream(config.seed);
  Rng init = stream.split();
  TrainState<S> st;
  st.gen_spec = config.generator_spec();
  st.critic_spec = config.critic_spec();
  st.gen = build_mlp<S>(st.gen_spec, init.next());
  st.critic = build_mlp<S>(st.critic_spec, init.next());
  return st;
}

namespace {

template <typename S>
std::vector<Array2<S>> grads_of(const std::vector<Var<S>>& vars, double sign) {
  std::vector<Array2<S>> out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(static_cast<S>(sign) * v.grad());
  return out;
}

// Data stream: the generator for the run after the init stream is split off.
Rng data_stream(const TrainConfig& config) {
  Rng stream(config.seed);
  stream.split();
  return stream;
}

using Clock = std::chrono::steady_clock;

template <typename S, typename StepFn>
TrainResult<S> run_loop(const TrainConfig& config, const RealSampler& real, const TrainHooks<S>& hooks,
                        StepFn&& step_fn) {
  TrainResult<S> result;
  result.state = init_state<S>(config);
  Rng rng = data_stream(config);
  result.records.reserve(static_cast<std::size_t>(config.steps));

  for (int step = 1; step <= config.steps; ++step) {
    const auto t0 = Clock::now();
    const Array2<S> x = real(config.batch_size, rng).template cast<S>();
    const Array2<S> z = sample_noise(config.batch_size, config.latent_dim, rng).template cast<S>();
    StepRecord rec;
    rec.step = step;
    // The critic phase may have committed before the generator phase fails;
    // keep a copy so a diverged run ends on the last completed step.
    MlpParams<S> critic_before = result.state.critic;
    try {
      step_fn(result.state, x, z, rec);
    } catch (const NumericError& e) {
      result.state.critic = std::move(critic_before);
      result.diverged = true;
      result.message = "step " + std::to_string(step) + ": " + e.what();
      break;
    }
    if (config.wall_clock) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    }
    result.records.push_back(rec);
    if (hooks.on_step) hooks.on_step(rec);
    if (hooks.on_eval && (step % config.eval_every == 0 || step == config.steps)) {
      hooks.on_eval(step, result.state);
    }
  }
  return result;
}

}  // namespace

template <typename S>
double triplet_critic_update(TrainState<S>& st, AdamState<S>& adam, const TrainConfig& config,
                             const TripletBatch& triplets, const Array2<S>& x, const Array2<S>& z) {
  Graph<S> g;
  const auto gp = bind(g, st.gen, false);
  const auto cp = bind(g, st.critic, true);
  Var<S> fake = generator_forward<S>(st.gen_spec, gp, g.constant(z));
  Var<S> e_real = critic_forward<S>(st.critic_spec, cp, g.constant(x));
  Var<S> e_fake = critic_forward<S>(st.critic_spec, cp, fake);
  Var<S> loss = clipped_critic_loss(e_real, e_fake, triplets, config.metric, ClipConfig{config.c});
  g.backward(loss);
  const auto grads = grads_of(cp, -1.0);  // ascent
  adam_step<S>(adam, st.critic.tensors, grads, {config.lr_c, config.beta1, config.beta2, config.eps_adam});
  return static_cast<double>(loss.item());
}

template <typename S>
TripletObjectiveValue triplet_generator_update(TrainState<S>& st, AdamState<S>& adam, const TrainConfig& config,
                                               const TripletBatch& triplets, const Array2<S>& x,
                                               const Array2<S>& z) {
  Graph<S> g;
  const auto gp = bind(g, st.gen, true);
  const auto cp = bind(g, st.critic, false);
  Var<S> fake = generator_forward<S>(st.gen_spec, gp, g.constant(z));
  Var<S> e_real = critic_forward<S>(st.critic_spec, cp, g.constant(x));
  Var<S> e_fake = critic_forward<S>(st.critic_spec, cp, fake);
  auto terms = triplet_objective(e_real, e_fake, triplets, config.metric);
  g.backward(terms.total);
  const auto grads = grads_of(gp, 1.0);
  adam_step<S>(adam, st.gen.tensors, grads, {config.lr_g, config.beta1, config.beta2, config.eps_adam});
  return terms.value();
}

template <typename S>
double vanilla_critic_update(TrainState<S>& st, AdamState<S>& adam, const TrainConfig& config,
                             const Array2<S>& x, const Array2<S>& z) {
  Graph<S> g;
  const auto gp = bind(g, st.gen, false);
  const auto cp = bind(g, st.critic, true);
  Var<S> fake = generator_forward<S>(st.gen_spec, gp, g.constant(z));
  auto losses = vanilla_gan_losses(critic_forward<S>(st.critic_spec, cp, g.constant(x)),
                                   critic_forward<S>(st.critic_spec, cp, fake));
  g.backward(losses.d_loss);
  const auto grads = grads_of(cp, 1.0);
  adam_step<S>(adam, st.critic.tensors, grads, {config.lr_c, config.beta1, config.beta2, config.eps_adam});
  return static_cast<double>(losses.d_loss.item());
}

template <typename S>
double vanilla_generator_update(TrainState<S>& st, AdamState<S>& adam, const TrainConfig& config,
                                const Array2<S>& z) {
  Graph<S> g;
  const auto gp = bind(g, st.gen, true);
  const auto cp = bind(g, st.critic, false);
  Var<S> fake = generator_forward<S>(st.gen_spec, gp, g.constant(z));
  Var<S> g_loss = mean_all(softplus(-critic_forward<S>(st.critic_spec, cp, fake)));
  g.backward(g_loss);
  const auto grads = grads_of(gp, 1.0);
  adam_step<S>(adam, st.gen.tensors, grads, {config.lr_g, config.beta1, config.beta2, config.eps_adam});
  return static_cast<double>(g_loss.item());
}

template <typename S>
TrainResult<S> train_tripletgan(const TrainConfig& config, const RealSampler& real,
                                const TrainHooks<S>& hooks) {
  if (config.model != ModelKind::triplet) throw ContractError("train_tripletgan: config.model is not triplet");
  config.validate();
  const TripletBatch triplets = make_triplets(config.batch_size);
  AdamState<S> adam_c, adam_g;
  return run_loop<S>(config, real, hooks, [&](TrainState<S>& st, const Array2<S>& x, const Array2<S>& z,
                                              StepRecord& rec) {
    rec.critic_loss = triplet_critic_update(st, adam_c, config, triplets, x, z);
    const auto v = triplet_generator_update(st, adam_g, config, triplets, x, z);
    rec.generator_loss = v.total;
    rec.cross_term = v.cross_term;
    rec.intra_term = v.intra_term;
  });
}

template <typename S>
TrainResult<S> train_vanilla(const TrainConfig& config, const RealSampler& real, const TrainHooks<S>& hooks) {
  if (config.model != ModelKind::vanilla) throw ContractError("train_vanilla: config.model is not vanilla");
  config.validate();
  AdamState<S> adam_c, adam_g;
  return run_loop<S>(config, real, hooks, [&](TrainState<S>& st, const Array2<S>& x, const Array2<S>& z,
                                              StepRecord& rec) {
    rec.critic_loss = vanilla_critic_update(st, adam_c, config, x, z);
    rec.generator_loss = vanilla_generator_update(st, adam_g, config, z);
  });
}

template <typename S>
TrainResult<S> train(const TrainConfig& config, const RealSampler& real, const TrainHooks<S>& hooks) {
  return config.model == ModelKind::triplet ? train_tripletgan<S>(config, real, hooks)
                                            : train_vanilla<S>(config, real, hooks);
}

template <typename S>
Array2d sample_generator(const MlpSpec& spec, const MlpParams<S>& params, Eigen::Index n, Rng& rng) {
  constexpr Eigen::Index kChunk = 1024;
  Array2d out(n, spec.output_dim());
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, n - start);
    Graph<S> g;
    const auto p = bind(g, params, false);
    const Array2<S> z = sample_noise(len, spec.input_dim(), rng).template cast<S>();
    out.middleRows(start, len) = generator_forward<S>(spec, p, g.constant(z)).value().template cast<double>();
  }
  return out;
}

template <typename S>
Array2d embed(const MlpSpec& spec, const MlpParams<S>& params, const Array2d& x) {
  Graph<S> g;
  const auto p = bind(g, params, false);
  return critic_forward<S>(spec, p, g.constant(x.template cast<S>())).value().template cast<double>();
}

#define TGAN_INSTANTIATE_TRAINER(S)                                                                   \
  template void adam_step(AdamState<S>&, std::span<Array2<S>>, std::span<const Array2<S>>,            \
                          const AdamHyper&);                                                          \
  template TrainState<S> init_state(const TrainConfig&);                                              \
  template double triplet_critic_update(TrainState<S>&, AdamState<S>&, const TrainConfig&,            \
                                        const TripletBatch&, const Array2<S>&, const Array2<S>&);     \
  template TripletObjectiveValue triplet_generator_update(TrainState<S>&, AdamState<S>&,              \
                                                          const TrainConfig&, const TripletBatch&,    \
                                                          const Array2<S>&, const Array2<S>&);        \
  template double vanilla_critic_update(TrainState<S>&, AdamState<S>&, const TrainConfig&,            \
                                        const Array2<S>&, const Array2<S>&);                          \
  template double vanilla_generator_update(TrainState<S>&, AdamState<S>&, const TrainConfig&,         \
                                           const Array2<S>&);                                         \
  template TrainResult<S> train_tripletgan(const TrainConfig&, const RealSampler&, const TrainHooks<S>&); \
  template TrainResult<S> train_vanilla(const TrainConfig&, const RealSampler&, const TrainHooks<S>&);  \
  template TrainResult<S> train(const TrainConfig&, const RealSampler&, const TrainHooks<S>&);         \
  template Array2d sample_generator(const MlpSpec&, const MlpParams<S>&, Eigen::Index, Rng&);         \
  template Array2d embed(const MlpSpec&, const MlpParams<S>&, const Array2d&);

TGAN_INSTANTIATE_TRAINER(double)
TGAN_INSTANTIATE_TRAINER(float)

#undef TGAN_INSTANTIATE_TRAINER

}  // namespace tgan
