#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tgan/evaluation.hpp"

namespace tgan {

/// Outcome of one self-check; `detail` is a one-line human summary.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Monte Carlo triplet distance of the Gaussian toy lies within 3 standard
/// errors of its closed form, and the mean-matching estimate within 3
/// standard errors of 0.
CheckResult check_toy(double sigma1, double sigma2, long n_mc = 1'000'000, std::uint64_t seed = 2024);

/// Toy check over the (sigma1, sigma2) grid {(0,1), (1,1), (1,2), (0.5,3)}.
std::vector<CheckResult> check_toy_grid(long n_mc = 1'000'000, std::uint64_t seed = 2024);

/// Max MMD identity residual over n_sets random embedding sets is <= 1e-9.
CheckResult check_mmd_identity(int n_sets = 200, std::uint64_t seed = 2025);

/// Ten fixed discrete distributions on atoms {0, ..., 4}.
std::vector<DiscreteDist> ipm_family();

/// Over every ordered pair of the family, brute_force_ipm is exactly 0 when
/// P = Q and above 0.05 otherwise.
CheckResult check_ipm_family(int k = 8);

/// P uniform on `atoms` atoms against Q with weights proportional to 2^-i on
/// the same atoms. Reports the supremum and its argmax assignment.
CheckResult check_ipm_pair(int atoms = 4, int grid = 8);

/// antipodal_optimality_check on several disjoint supports with k = 8: the
/// maximizer is antipodal and the value is the chord diameter 2.
CheckResult check_antipodal();

/// grad_check <= 1e-4 on the clipped critic, generator and vanilla losses
/// composed with small networks of the training architectures' layer types,
/// at n_points random points each, skipping points near a kink.
std::vector<CheckResult> check_gradients(int n_points = 50, std::uint64_t seed = 2026);

/// make_triplets sizes, the exact clip/hinge identity, and the half-chord arc
/// form against arccos.
std::vector<CheckResult> check_structural(std::uint64_t seed = 2027);

/// Every check above with default arguments, in a fixed order.
std::vector<CheckResult> run_theory_checks();

}  // namespace tgan
