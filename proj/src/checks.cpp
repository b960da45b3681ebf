#include "tgan/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "tgan/losses.hpp"
#include "tgan/sphere.hpp"

namespace tgan {

namespace {

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream o;
  for (std::size_t i = 0; i < v.size(); ++i) o << (i ? " " : "") << v[i];
  return o.str();
}

Array2d random_unit_rows(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Array2d out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = rng.normal();
    out.row(i).normalize();
  }
  return out;
}

Array2d random_normal(Eigen::Index n, Eigen::Index d, Rng& rng, double scale = 1.0) {
  Array2d out(n, d);
  for (Eigen::Index k = 0; k < out.size(); ++k) out.data()[k] = scale * rng.normal();
  return out;
}

}  // namespace

// ---- Gaussian toy ------------------------------------------------------------

CheckResult check_toy(double sigma1, double sigma2, long n_mc, std::uint64_t seed) {
  Rng rng(seed);
  const ToyCheck t = toy_distance_check(sigma1, sigma2, n_mc, rng);
  // The Monte Carlo estimate is E|X1 - X2| - E|Y - X1|, whose closed form is
  // sqrt(2/pi) (sqrt(2) s2 - sqrt(s1^2 + s2^2)); its magnitude is the distance.
  const double signed_closed = std::sqrt(2.0 / std::numbers::pi) *
                               (std::numbers::sqrt2 * sigma2 - std::hypot(sigma1, sigma2));
  const bool formula_ok = std::abs(std::abs(signed_closed) - t.analytic) <= 1e-15;
  const bool mc_ok = std::abs(t.mc_estimate - signed_closed) <= 3.0 * t.std_err;
  const bool mean_ok = std::abs(t.mean_match) <= 3.0 * t.mean_match_std_err;
  return {fmt("toy sigma1=%g sigma2=%g", sigma1, sigma2), formula_ok && mc_ok && mean_ok,
          fmt("analytic %.6f, MC %.6f +- %.1e (%.2f se); mean match %.2e +- %.1e", t.analytic, t.mc_estimate,
              t.std_err, std::abs(t.mc_estimate - signed_closed) / t.std_err, t.mean_match,
              t.mean_match_std_err)};
}

std::vector<CheckResult> check_toy_grid(long n_mc, std::uint64_t seed) {
  std::vector<CheckResult> out;
  const double grid[][2] = {{0.0, 1.0}, {1.0, 1.0}, {1.0, 2.0}, {0.5, 3.0}};
  for (const auto& s : grid) out.push_back(check_toy(s[0], s[1], n_mc, seed++));
  return out;
}

// ---- MMD identity ------------------------------------------------------------

CheckResult check_mmd_identity(int n_sets, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int s = 0; s < n_sets; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.below(12));
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(12));
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(15));
    const Metric metric = s % 2 ? Metric::arc : Metric::chord;
    worst = std::max(worst, mmd_identity_residual(random_unit_rows(m, d, rng), random_unit_rows(n, d, rng), metric));
  }
  return {"MMD identity", worst <= 1e-9, fmt("max residual %.2e over %d sets", worst, n_sets)};
}

// ---- IPM witnesses -----------------------------------------------------------

std::vector<DiscreteDist> ipm_family() {
  return {
      {{0}, {1.0}},
      {{1}, {1.0}},
      {{0, 1}, {0.5, 0.5}},
      {{0, 1}, {0.75, 0.25}},
      {{0, 1, 2}, {1.0 / 3, 1.0 / 3, 1.0 / 3}},
      {{0, 1, 2, 3, 4}, {0.2, 0.2, 0.2, 0.2, 0.2}},
      {{2, 3, 4}, {0.5, 0.3, 0.2}},
      {{0, 1, 2, 3}, {0.1, 0.2, 0.3, 0.4}},
      {{3, 4}, {0.5, 0.5}},
      {{0, 4}, {0.4, 0.6}},
  };
}

CheckResult check_ipm_family(int k) {
  const auto family = ipm_family();
  double worst_same = 0.0, least_diff = std::numeric_limits<double>::infinity();
  std::size_t least_p = 0, least_q = 0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    for (std::size_t j = 0; j < family.size(); ++j) {
      const double v = brute_force_ipm(family[i], family[j], k).value;
      if (i == j) {
        worst_same = std::max(worst_same, std::abs(v));
      } else if (v < least_diff) {
        least_diff = v;
        least_p = i;
        least_q = j;
      }
    }
  }
  return {"IPM family", worst_same == 0.0 && least_diff > 0.05,
          fmt("P=Q max |value| %.1e; P!=Q min value %.4f (P=#%zu, Q=#%zu), k=%d", worst_same, least_diff, least_p,
              least_q, k)};
}

CheckResult check_ipm_pair(int atoms, int grid) {
  if (atoms < 1 || atoms > kMaxIpmAtoms) {
    throw ContractError("atoms must be in [1, " + std::to_string(kMaxIpmAtoms) + "]");
  }
  DiscreteDist p, q;
  double total = 0.0;
  for (int a = 0; a < atoms; ++a) {
    p.atoms.push_back(a);
    p.probs.push_back(1.0 / atoms);
    q.atoms.push_back(a);
    q.probs.push_back(std::ldexp(1.0, -a));
    total += q.probs.back();
  }
  for (auto& w : q.probs) w /= total;
  const IpmResult r = brute_force_ipm(p, q, grid);
  const bool ok = atoms == 1 ? r.value == 0.0 : r.value > 0.0 && r.value <= 2.0;
  return {fmt("IPM atoms=%d grid=%d", atoms, grid), ok,
          fmt("sup %.10f at assignment [%s]", r.value, join_ints(r.assignment).c_str())};
}

CheckResult check_antipodal() {
  const int cases[][2] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}, {2, 3}, {3, 2}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const AntipodalResult r = antipodal_optimality_check(c[0], c[1], 8);
    const bool pass = r.antipodal && !r.non_antipodal_maximizer && std::abs(r.best.value - 2.0) <= 1e-12;
    ok = ok && pass;
    detail += fmt("%s%dr/%df %.4f%s", detail.empty() ? "" : "; ", c[0], c[1], r.best.value, pass ? "" : " FAIL");
  }
  return {"antipodal critic", ok, detail};
}

// ---- gradients ---------------------------------------------------------------

namespace {

constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-6;
constexpr int kGradBatch = 4;

// Smaller versions of the benchmark networks: same layer types, fewer units,
// so the central-difference sweep over every parameter stays cheap.
MlpSpec small_generator() { return {{3, 6, 6, 2}, Activation::tanh, OutputTransform::linear}; }
MlpSpec small_critic(int features) {
  return {{2, 6, 6, features}, Activation::tanh,
          features > 1 ? OutputTransform::l2_normalize : OutputTransform::linear};
}

std::vector<Array2d> random_params(const MlpSpec& spec, Rng& rng) {
  std::vector<Array2d> out;
  for (int l = 0; l < spec.depth(); ++l) {
    const double s = 1.0 / std::sqrt(static_cast<double>(spec.layer_sizes[l]));
    out.push_back(random_normal(spec.layer_sizes[l], spec.layer_sizes[l + 1], rng, 1.5 * s));
    out.push_back(random_normal(1, spec.layer_sizes[l + 1], rng, 0.3));
  }
  return out;
}

std::vector<double> per_triplet_values(const Array2d& er, const Array2d& ef, const TripletBatch& t, Metric m) {
  const Array2d rf = pairwise_distances(er, ef, m);
  const Array2d ff = pairwise_distances(ef, ef, m);
  std::vector<double> out;
  for (const auto& tr : t) out.push_back(rf(tr.real_i, tr.fake_i) - ff(tr.fake_i, tr.fake_j));
  return out;
}

// Away from kinks: no triplet near the clip, no pair near coincident or
// antipodal, so every term is smooth within the difference step.
bool smooth_point(const Array2d& er, const Array2d& ef, const TripletBatch& t, double c) {
  const Array2d rf = pairwise_distances(er, ef, Metric::chord);
  const Array2d ff = pairwise_distances(ef, ef, Metric::chord);
  auto ok = [](double chord) { return chord > 1e-2 && chord < 2.0 - 1e-2; };
  for (const auto& tr : t) {
    if (!ok(rf(tr.real_i, tr.fake_i)) || !ok(ff(tr.fake_i, tr.fake_j))) return false;
  }
  for (double a : per_triplet_values(er, ef, t, Metric::arc)) {
    if (std::abs(a - c) < 1e-3) return false;
  }
  return true;
}

std::vector<Var<double>> slice(std::span<const Var<double>> v, std::size_t from, std::size_t n) {
  return {v.begin() + static_cast<std::ptrdiff_t>(from), v.begin() + static_cast<std::ptrdiff_t>(from + n)};
}

CheckResult summarize_grad(const std::string& name, const std::vector<double>& errs, int skipped) {
  double worst = 0.0;
  for (double e : errs) worst = std::max(worst, e);
  return {name, errs.size() > 0 && worst <= kGradTol,
          fmt("max relative error %.2e over %zu points (%d near-kink draws redrawn)", worst, errs.size(), skipped)};
}

}  // namespace

std::vector<CheckResult> check_gradients(int n_points, std::uint64_t seed) {
  Rng rng(seed);
  const MlpSpec gen = small_generator();
  const MlpSpec critic = small_critic(4);
  const MlpSpec disc = small_critic(1);
  const TripletBatch triplets = make_triplets(kGradBatch);
  const std::size_t ng = gen.layer_sizes.size() * 2 - 2, nc = critic.layer_sizes.size() * 2 - 2;

  // Embeddings of a candidate point, for the kink test.
  auto embed_pair = [&](const std::vector<Array2d>& cp, const Array2d& x, const Array2d& fake) {
    Graph<double> g;
    std::vector<Var<double>> p;
    for (const auto& t : cp) p.push_back(g.constant(t));
    return std::pair{critic_forward<double>(critic, p, g.constant(x)).value(),
                     critic_forward<double>(critic, p, g.constant(fake)).value()};
  };
  auto generate = [&](const std::vector<Array2d>& gp, const Array2d& z) {
    Graph<double> g;
    std::vector<Var<double>> p;
    for (const auto& t : gp) p.push_back(g.constant(t));
    return generator_forward<double>(gen, p, g.constant(z)).value();
  };

  std::vector<double> err_critic, err_gen, err_vanilla;
  int skip_critic = 0, skip_gen = 0;
  constexpr int kMaxDraws = 100;

  // Clipped critic loss as a function of the critic parameters and both batches.
  while (static_cast<int>(err_critic.size()) < n_points && skip_critic < kMaxDraws * n_points) {
    const auto cp = random_params(critic, rng);
    const Array2d x = random_normal(kGradBatch, 2, rng), fake = random_normal(kGradBatch, 2, rng);
    const double c = 0.2 + 1.5 * rng.uniform();
    const auto [er, ef] = embed_pair(cp, x, fake);
    if (!smooth_point(er, ef, triplets, c)) {
      ++skip_critic;
      continue;
    }
    std::vector<Array2d> point = cp;
    point.push_back(x);
    point.push_back(fake);
    err_critic.push_back(grad_check(
        [&](Graph<double>&, std::span<const Var<double>> v) {
          const auto p = slice(v, 0, nc);
          return clipped_critic_loss(critic_forward<double>(critic, p, v[nc]),
                                     critic_forward<double>(critic, p, v[nc + 1]), triplets, Metric::arc,
                                     ClipConfig{c});
        },
        point, kGradStep));
  }

  // Generator loss through both networks, as a function of the generator
  // parameters and the latent batch.
  while (static_cast<int>(err_gen.size()) < n_points && skip_gen < kMaxDraws * n_points) {
    const auto gp = random_params(gen, rng);
    const auto cp = random_params(critic, rng);
    const Array2d x = random_normal(kGradBatch, 2, rng), z = random_normal(kGradBatch, 3, rng);
    const auto [er, ef] = embed_pair(cp, x, generate(gp, z));
    if (!smooth_point(er, ef, triplets, std::numeric_limits<double>::infinity())) {
      ++skip_gen;
      continue;
    }
    std::vector<Array2d> point = gp;
    point.push_back(z);
    err_gen.push_back(grad_check(
        [&](Graph<double>& g, std::span<const Var<double>> v) {
          std::vector<Var<double>> c;
          for (const auto& t : cp) c.push_back(g.constant(t));
          const Var<double> fake = generator_forward<double>(gen, slice(v, 0, ng), v[ng]);
          return generator_loss(critic_forward<double>(critic, c, g.constant(x)),
                                critic_forward<double>(critic, c, fake), triplets, Metric::arc);
        },
        point, kGradStep));
  }

  // Vanilla: d_loss + g_loss through both networks; each parameter set feeds
  // both terms. The losses are smooth everywhere.
  while (static_cast<int>(err_vanilla.size()) < n_points) {
    const auto gp = random_params(gen, rng);
    const auto dp = random_params(disc, rng);
    const Array2d x = random_normal(kGradBatch, 2, rng), z = random_normal(kGradBatch, 3, rng);
    std::vector<Array2d> point = gp;
    point.insert(point.end(), dp.begin(), dp.end());
    point.push_back(x);
    point.push_back(z);
    err_vanilla.push_back(grad_check(
        [&](Graph<double>&, std::span<const Var<double>> v) {
          const auto g = slice(v, 0, ng), d = slice(v, ng, nc);
          const Var<double> fake = generator_forward<double>(gen, g, v[ng + nc + 1]);
          const auto l = vanilla_gan_losses(critic_forward<double>(disc, d, v[ng + nc]),
                                            critic_forward<double>(disc, d, fake));
          return l.d_loss + l.g_loss;
        },
        point, kGradStep));
  }

  return {summarize_grad("grad clipped critic", err_critic, skip_critic),
          summarize_grad("grad generator", err_gen, skip_gen), summarize_grad("grad vanilla", err_vanilla, 0)};
}

// ---- structural identities ---------------------------------------------------

std::vector<CheckResult> check_structural(std::uint64_t seed) {
  std::vector<CheckResult> out;

  bool sizes_ok = true;
  for (int b = 2; b <= 32; ++b) sizes_ok = sizes_ok && make_triplets(b).size() == static_cast<std::size_t>(b * (b - 1));
  out.push_back({"triplet count", sizes_ok, "make_triplets(B) = B(B-1) for B = 2..32"});

  // Dyadic values with few significant bits make every subtraction and every
  // partial sum exact, so the two forms must agree bit for bit.
  Rng rng(seed);
  bool clip_ok = true;
  double worst_real = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = Eigen::Index{1} << rng.below(9);  // 1..256, so the mean's division is exact
    Array2d a(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      a(i, 0) = std::ldexp(static_cast<double>(static_cast<std::int64_t>(rng.below(1 << 16)) - (1 << 15)), -12);
    }
    const double c = std::ldexp(static_cast<double>(1 + rng.below(1 << 14)), -12);
    Graph<double> g;
    const double clipped = mean_all(min_with_const(g.constant(a), c)).item();
    const double hinge = c - (c - a.array()).max(0.0).mean();
    clip_ok = clip_ok && clipped == hinge;

    // General reals: equal up to rounding.
    Array2d r = random_normal(n, 1, rng, 2.0);
    const double cr = 0.1 + 2.0 * rng.uniform();
    Graph<double> g2;
    const double clipped_r = mean_all(min_with_const(g2.constant(r), cr)).item();
    worst_real = std::max(worst_real, std::abs(clipped_r - (cr - (cr - r.array()).max(0.0).mean())));
  }
  out.push_back({"clip identity", clip_ok && worst_real <= 1e-12,
                 fmt("exact on 100 dyadic vectors; %.1e on real-valued vectors", worst_real)});

  double worst_arc = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(15));
    const Array2d uv = random_unit_rows(2, d, rng);
    const double dot = std::clamp(uv.row(0).dot(uv.row(1)), -1.0, 1.0);
    const double arc = arc_distance(uv.row(0), uv.row(1));
    const double half_chord = 2.0 * std::asin(0.5 * chord_distance(uv.row(0), uv.row(1)));
    worst_arc = std::max({worst_arc, std::abs(arc - std::acos(dot)), std::abs(arc - half_chord)});
  }
  out.push_back({"arc = 2 asin(chord/2)", worst_arc <= 1e-9,
                 fmt("max deviation from arccos(u.v) and 2 asin(chord/2) %.1e on 10^4 pairs", worst_arc)});
  return out;
}

std::vector<CheckResult> run_theory_checks() {
  std::vector<CheckResult> out;
  auto append = [&out](std::vector<CheckResult> v) { out.insert(out.end(), v.begin(), v.end()); };
  append(check_gradients());
  append(check_structural());
  append(check_toy_grid());
  out.push_back(check_mmd_identity());
  out.push_back(check_ipm_family());
  out.push_back(check_antipodal());
  return out;
}

}  // namespace tgan
