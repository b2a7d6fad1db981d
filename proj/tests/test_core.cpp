#include <gtest/gtest.h>

#include <cmath>

#include "duellab/core.hpp"
#include "duellab/error.hpp"
#include "duellab/rng.hpp"

using namespace duellab;

namespace {
const LinkFunction kBtl{};
}

TEST(Link, ZeroIsHalf) { EXPECT_DOUBLE_EQ(link_eval(kBtl, 0.0), 0.5); }

TEST(Link, SymmetricPairSumsToOne) {
  for (double x : {0.1, 1.0, 3.7, 20.0, 700.0, 1e5}) {
    EXPECT_NEAR(link_eval(kBtl, x) + link_eval(kBtl, -x), 1.0, 1e-12) << x;
  }
}

TEST(Link, LogOddsOfSevenTenths) {
  // closed-form inverse: x = ln(p / (1 - p))
  const double x = std::log(7.0 / 3.0);
  EXPECT_NEAR(x, 0.847298, 1e-6);
  EXPECT_NEAR(link_eval(kBtl, x), 0.7, 1e-12);
}

TEST(Link, StrictlyIncreasingAndBounded) {
  double prev = 0.0;
  for (double x = -30.0; x <= 30.0; x += 0.25) {
    const double p = link_eval(kBtl, x);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    EXPECT_GT(p, prev);
    prev = p;
  }
}

TEST(Link, NonFiniteRejected) {
  EXPECT_THROW(link_eval(kBtl, std::nan("")), InvalidInput);
  EXPECT_THROW(link_eval(kBtl, INFINITY), InvalidInput);
}

TEST(LinkDeriv, Values) {
  EXPECT_DOUBLE_EQ(link_deriv(kBtl, 0.0), 0.25);
  const double e = std::exp(-10.0);
  const double oracle = (1.0 / (1.0 + e)) * (e / (1.0 + e));
  EXPECT_NEAR(link_deriv(kBtl, 10.0), oracle, 1e-12 * oracle);
  // the rounded reference value 4.5398e-5 is off in the fifth digit; the product itself is 4.53958e-5
  EXPECT_NEAR(link_deriv(kBtl, 10.0), 4.53958e-5, 1e-10);
  for (double x : {0.3, 2.0, 9.0}) EXPECT_DOUBLE_EQ(link_deriv(kBtl, x), link_deriv(kBtl, -x));
}

TEST(LinkDeriv, MatchesFiniteDifference) {
  for (double x : {-4.0, -0.5, 0.0, 1.3, 6.0}) {
    const double h = 1e-6;
    const double fd = (link_eval(kBtl, x + h) - link_eval(kBtl, x - h)) / (2 * h);
    EXPECT_NEAR(link_deriv(kBtl, x), fd, 1e-9);
    EXPECT_LE(link_deriv(kBtl, x), 0.25);
  }
}

TEST(Softplus, MatchesLogOfSigmoid) {
  for (double x : {-50.0, -3.0, 0.0, 2.0, 40.0}) {
    EXPECT_NEAR(-softplus(-x), std::log(sigmoid(x)), 1e-12);
  }
}

TEST(Symmetrize, HandNormalization) {
  const double z[] = {3.0, 4.0};
  const Vector out = symmetrize_context(z, 4);
  const double expect[] = {0.424264, 0.565685, 0.424264, 0.565685};
  ASSERT_EQ(out.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(out[i], expect[i], 1e-6);
}

TEST(Symmetrize, UnitCase) {
  const double z[] = {1.0};
  const Vector out = symmetrize_context(z, 2);
  EXPECT_NEAR(out[0], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(out[1], 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Symmetrize, HalvesIdenticalAndUnitNorm) {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    Vector z(5);
    for (auto& v : z) v = rng.normal();
    const Vector out = symmetrize_context(z, 10);
    double n2 = 0.0;
    for (int i = 0; i < 5; ++i) {
      EXPECT_EQ(out[i], out[i + 5]);
      n2 += out[i] * out[i] + out[i + 5] * out[i + 5];
    }
    EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-9);
  }
}

TEST(Symmetrize, Errors) {
  const double z[] = {1.0, 2.0};
  EXPECT_THROW(symmetrize_context(z, 3), Error);
  EXPECT_THROW(symmetrize_context(z, 6), Error);
  const double zero[] = {0.0, 0.0};
  EXPECT_THROW(symmetrize_context(zero, 4), DegenerateContext);
}

TEST(Regret, Average) {
  EXPECT_DOUBLE_EQ(average_regret(1, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(average_regret(0.7, 0.7, 0.7), 0.0);
  EXPECT_NEAR(average_regret(0.9, 0.5, 0.1), 0.6, 1e-15);
}

TEST(Regret, Weak) {
  EXPECT_DOUBLE_EQ(weak_regret(1, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(weak_regret(0.9, 0.9, 0.1), 0.0);
  EXPECT_NEAR(weak_regret(0.9, 0.5, 0.1), 0.4, 1e-15);
}

TEST(RegretTrace, CumulativeIsPrefixSum) {
  RegretTrace tr;
  const double a[] = {0.5, 0.25, 0.0, 1.0};
  const double w[] = {0.1, 0.0, 0.3, 0.2};
  double ca = 0, cw = 0;
  for (int i = 0; i < 4; ++i) {
    tr.push(a[i], w[i], 1.0);
    ca += a[i];
    cw += w[i];
    EXPECT_EQ(tr.cum_avg.back(), ca);
    EXPECT_EQ(tr.cum_weak.back(), cw);
  }
  EXPECT_EQ(tr.size(), 4u);
}

TEST(Rng, StreamsReproducibleAndDistinct) {
  Rng a = derive_stream(3, "square", "nvldb-ucb-asym", "select");
  Rng b = derive_stream(3, "square", "nvldb-ucb-asym", "select");
  Rng c = derive_stream(3, "square", "nvldb-ucb-asym", "duel");
  for (int i = 0; i < 10; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
  }
  EXPECT_NE(derive_seed(0, "a", "", "x"), derive_seed(1, "a", "", "x"));
  EXPECT_NE(derive_seed(0, "ab", "", "x"), derive_seed(0, "a", "b", "x"));
}

TEST(Rng, ZeroSdReturnsMeanWithoutDrawing) {
  Rng a(11), b(11);
  EXPECT_EQ(a.normal(2.5, 0.0), 2.5);
  EXPECT_EQ(a.uniform(), b.uniform());
}
