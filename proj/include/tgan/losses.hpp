#pragma once

#include "tgan/autodiff.hpp"
#include "tgan/sampler.hpp"

namespace tgan {

/// Hard-example threshold: per-triplet critic values at or above c are
/// clipped and stop contributing gradient.
struct ClipConfig {
  double c = 0.5;
  void validate() const {
    if (!(c > 0.0)) throw ContractError("c must be > 0");
  }
};

struct TripletObjectiveValue {
  double cross_term = 0.0;  // mean distance real <-> fake
  double intra_term = 0.0;  // mean distance fake <-> fake
  double total = 0.0;       // cross_term - intra_term
};

template <typename S>
struct TripletTerms {
  Var<S> cross;
  Var<S> intra;
  Var<S> total;
  /// Per-triplet d(real_i, fake_i) - d(fake_i, fake_j), T x 1.
  Var<S> per_triplet;

  TripletObjectiveValue value() const {
    return {static_cast<double>(cross.item()), static_cast<double>(intra.item()),
            static_cast<double>(total.item())};
  }
};

/// Mean over triplets of d(f(real_i), f(fake_i)) - d(f(fake_i), f(fake_j)).
/// Embeddings must be unit rows.
template <typename S>
TripletTerms<S> triplet_objective(Var<S> emb_real, Var<S> emb_fake, const TripletBatch& triplets,
                                  Metric metric);

/// mean_t min(a_t, c): the quantity the critic ascends.
template <typename S>
Var<S> clipped_critic_loss(Var<S> emb_real, Var<S> emb_fake, const TripletBatch& triplets,
                           Metric metric, ClipConfig clip);

/// The unclipped objective; the generator descends it.
template <typename S>
Var<S> generator_loss(Var<S> emb_real, Var<S> emb_fake, const TripletBatch& triplets, Metric metric);

template <typename S>
struct VanillaLosses {
  Var<S> d_loss;  // -mean log s(d_real) - mean log(1 - s(d_fake))
  Var<S> g_loss;  // -mean log s(d_fake), non-saturating
};

template <typename S>
VanillaLosses<S> vanilla_gan_losses(Var<S> d_real_logits, Var<S> d_fake_logits);

// ---- plain evaluations -------------------------------------------------------

TripletObjectiveValue triplet_objective_value(const Array2d& emb_real, const Array2d& emb_fake,
                                              const TripletBatch& triplets, Metric metric);

/// Mean of the metric over all ordered row pairs of a x b, diagonal included.
double mean_pairwise_distance(const Array2d& a, const Array2d& b, Metric metric);

/// E_aa k - 2 E_ab k + E_bb k with k(x, y) = d(x, y) over all ordered pairs.
/// The kernel is not positive definite, so the result can be negative.
double mmd_chord_kernel(const Array2d& emb_a, const Array2d& emb_b, Metric metric);

/// |sqrt(2/pi) (sqrt(s1^2 + s2^2) - sqrt(2) s2)|: E|Y - X1| - E|X1 - X2| in
/// magnitude for X ~ N(0, s2^2), Y ~ N(0, s1^2). Requires s2 >= s1 >= 0.
double toy_gaussian_triplet_distance(double sigma1, double sigma2);

}  // namespace tgan
