#include <gtest/gtest.h>

#include <algorithm>

#include "tgan/checks.hpp"

using namespace tgan;

// On two atoms with P = (p, 1-p) and Q = (q, 1-q), the objective for a map
// placing the atoms a distance d apart is d (p - q)(1 - 2q), so the supremum
// over an even grid (d up to 2) is max(0, 2 (p - q)(1 - 2q)).
TEST(IpmWitness, TwoAtomSupremumMatchesClosedForm) {
  const double ws[] = {0.0, 0.1, 0.25, 0.5, 0.6, 0.75, 0.9, 1.0};
  for (double p : ws) {
    for (double q : ws) {
      const DiscreteDist P{{0, 1}, {p, 1.0 - p}}, Q{{0, 1}, {q, 1.0 - q}};
      const double expected = std::max(0.0, 2.0 * (p - q) * (1.0 - 2.0 * q));
      EXPECT_NEAR(brute_force_ipm(P, Q, 8).value, expected, 1e-12) << "p=" << p << " q=" << q;
    }
  }
}

// A balanced fake distribution cannot be told apart from any reweighting of
// its own atoms: every f gives cross term = intra term.
TEST(IpmWitness, BalancedFakeHidesDistinctReal) {
  const DiscreteDist point{{0}, {1.0}}, balanced{{0, 1}, {0.5, 0.5}};
  EXPECT_EQ(brute_force_ipm(point, balanced, 8).value, 0.0);
  EXPECT_EQ(brute_force_ipm(point, balanced, 12).value, 0.0);
  // The reverse direction does separate them.
  EXPECT_DOUBLE_EQ(brute_force_ipm(balanced, point, 8).value, 1.0);
}

TEST(IpmWitness, FamilyIsTenDistinctDistributionsOnFiveAtoms) {
  const auto family = ipm_family();
  ASSERT_EQ(family.size(), 10u);
  for (std::size_t i = 0; i < family.size(); ++i) {
    EXPECT_NO_THROW(family[i].validate());
    for (int a : family[i].atoms) EXPECT_TRUE(a >= 0 && a < 5);
    for (std::size_t j = 0; j < i; ++j) {
      EXPECT_FALSE(family[i].atoms == family[j].atoms && family[i].probs == family[j].probs) << i << " " << j;
    }
  }
}

TEST(IpmWitness, PairCheckReportsAssignment) {
  const auto r = check_ipm_pair(4, 8);
  EXPECT_TRUE(r.passed) << r.detail;
  EXPECT_NE(r.detail.find("assignment ["), std::string::npos);
  EXPECT_THROW(check_ipm_pair(0, 8), ContractError);
}

TEST(SelfChecks, IdentitiesPass) {
  for (const auto& r : check_structural()) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  const auto mmd = check_mmd_identity(20);
  EXPECT_TRUE(mmd.passed) << mmd.detail;
  const auto anti = check_antipodal();
  EXPECT_TRUE(anti.passed) << anti.detail;
}

TEST(SelfChecks, GradientsPassOnAFewPoints) {
  const auto results = check_gradients(5, 99);
  ASSERT_EQ(results.size(), 3u);
  for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(SelfChecks, ToyCheckUsesSignedClosedForm) {
  const auto r = check_toy(0.0, 1.0, 200000, 5);
  EXPECT_TRUE(r.passed) << r.detail;
  EXPECT_NE(r.detail.find("analytic 0.330495"), std::string::npos) << r.detail;
}
