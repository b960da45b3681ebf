#include "tgan/losses.hpp"

#include <cmath>
#include <numbers>

#include "tgan/sphere.hpp"

namespace tgan {

template <typename S>
TripletTerms<S> triplet_objective(Var<S> emb_real, Var<S> emb_fake, const TripletBatch& triplets,
                                  Metric metric) {
  if (triplets.empty()) throw ContractError("triplet objective: empty triplet set");
  if (emb_real.cols() != emb_fake.cols()) {
    throw DimensionError("triplet objective: embedding widths " + std::to_string(emb_real.cols()) +
                         " and " + std::to_string(emb_fake.cols()) + " differ");
  }
  require_unit_rows(emb_real.value(), "real embedding");
  require_unit_rows(emb_fake.value(), "fake embedding");

  const auto n_real = static_cast<int>(emb_real.rows());
  const auto n_fake = static_cast<int>(emb_fake.rows());
  std::vector<std::pair<int, int>> cross_idx, intra_idx;
  cross_idx.reserve(triplets.size());
  intra_idx.reserve(triplets.size());
  for (const auto& t : triplets) {
    if (t.fake_i < 0 || t.fake_j < 0 || t.real_i < 0 || t.fake_i >= n_fake || t.fake_j >= n_fake ||
        t.real_i >= n_real) {
      throw ContractError("triplet (" + std::to_string(t.fake_i) + ", " + std::to_string(t.fake_j) +
                          ", " + std::to_string(t.real_i) + ") out of range for batches of " +
                          std::to_string(n_fake) + " fake and " + std::to_string(n_real) + " real");
    }
    cross_idx.emplace_back(t.real_i, t.fake_i);
    intra_idx.emplace_back(t.fake_i, t.fake_j);
  }

  Var<S> d_rf = pairwise_row_distance(emb_real, emb_fake, metric);
  Var<S> d_ff = pairwise_row_distance(emb_fake, emb_fake, metric);
  Var<S> cross_vec = gather(d_rf, std::span<const std::pair<int, int>>(cross_idx));
  Var<S> intra_vec = gather(d_ff, std::span<const std::pair<int, int>>(intra_idx));

  TripletTerms<S> out;
  out.cross = mean_all(cross_vec);
  out.intra = mean_all(intra_vec);
  out.total = out.cross - out.intra;
  out.per_triplet = cross_vec - intra_vec;
  return out;
}

template <typename S>
Var<S> clipped_critic_loss(Var<S> emb_real, Var<S> emb_fake, const TripletBatch& triplets,
                           Metric metric, ClipConfig clip) {
  clip.validate();
  auto terms = triplet_objective(emb_real, emb_fake, triplets, metric);
  return mean_all(min_with_const(terms.per_triplet, clip.c));
}

template <typename S>
Var<S> generator_loss(Var<S> emb_real, Var<S> emb_fake, const TripletBatch& triplets, Metric metric) {
  return triplet_objective(emb_real, emb_fake, triplets, metric).total;
}

template <typename S>
VanillaLosses<S> vanilla_gan_losses(Var<S> d_real_logits, Var<S> d_fake_logits) {
  if (d_real_logits.cols() != 1 || d_fake_logits.cols() != 1) {
    throw DimensionError("vanilla losses expect column logits, got " + shape_str(d_real_logits.value()) +
                         " and " + shape_str(d_fake_logits.value()));
  }
  // -log s(x) = softplus(-x); -log(1 - s(x)) = softplus(x).
  VanillaLosses<S> out;
  out.d_loss = mean_all(softplus(-d_real_logits)) + mean_all(softplus(d_fake_logits));
  out.g_loss = mean_all(softplus(-d_fake_logits));
  return out;
}

TripletObjectiveValue triplet_objective_value(const Array2d& emb_real, const Array2d& emb_fake,
                                              const TripletBatch& triplets, Metric metric) {
  Graph<double> g;
  return triplet_objective(g.constant(emb_real), g.constant(emb_fake), triplets, metric).value();
}

double mean_pairwise_distance(const Array2d& a, const Array2d& b, Metric metric) {
  if (a.rows() == 0 || b.rows() == 0) throw ContractError("mean_pairwise_distance: empty batch");
  return pairwise_distances(a, b, metric).mean();
}

double mmd_chord_kernel(const Array2d& emb_a, const Array2d& emb_b, Metric metric) {
  if (emb_a.rows() == 0 || emb_b.rows() == 0) throw ContractError("mmd: empty batch");
  return mean_pairwise_distance(emb_a, emb_a, metric) - 2.0 * mean_pairwise_distance(emb_a, emb_b, metric) +
         mean_pairwise_distance(emb_b, emb_b, metric);
}

double toy_gaussian_triplet_distance(double sigma1, double sigma2) {
  if (!(sigma1 >= 0.0) || !(sigma2 >= sigma1)) {
    throw ContractError("toy distance requires sigma2 >= sigma1 >= 0, got sigma1=" +
                        std::to_string(sigma1) + " sigma2=" + std::to_string(sigma2));
  }
  return std::abs(std::sqrt(2.0 / std::numbers::pi) *
                  (std::sqrt(sigma1 * sigma1 + sigma2 * sigma2) - std::numbers::sqrt2 * sigma2));
}

#define TGAN_INSTANTIATE_LOSSES(S)                                                                \
  template TripletTerms<S> triplet_objective(Var<S>, Var<S>, const TripletBatch&, Metric);        \
  template Var<S> clipped_critic_loss(Var<S>, Var<S>, const TripletBatch&, Metric, ClipConfig);   \
  template Var<S> generator_loss(Var<S>, Var<S>, const TripletBatch&, Metric);                    \
  template VanillaLosses<S> vanilla_gan_losses(Var<S>, Var<S>);

TGAN_INSTANTIATE_LOSSES(double)
TGAN_INSTANTIATE_LOSSES(float)

#undef TGAN_INSTANTIATE_LOSSES

}  // namespace tgan
