#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "duellab/error.hpp"
#include "duellab/select.hpp"
#include "oracle.hpp"

using namespace duellab;

namespace {

// d=1, theta=1, phi=(0.9, 0.5, 0.1), V=(1)
ArmScores line_setup() {
  ArmScores s;
  s.utilities = {0.9, 0.5, 0.1};
  s.features = Matrix(3, 1);
  s.features(0, 0) = 0.9;
  s.features(1, 0) = 0.5;
  s.features(2, 0) = 0.1;
  return s;
}

struct Instance {
  ArmScores scores;
  GramState gram;
};

Instance random_instance(Rng& rng, std::size_t k, std::size_t p) {
  Instance in;
  in.scores.features = Matrix(k, p);
  for (auto& v : in.scores.features.flat()) v = rng.normal();
  in.scores.utilities.resize(k);
  for (auto& u : in.scores.utilities) u = rng.normal();
  in.gram = init_gram(p, rng.uniform(0.5, 2.0));
  for (int i = 0; i < 6; ++i) {
    Vector x(p);
    for (auto& v : x) v = rng.normal();
    rank_one_update(in.gram, x, rng.uniform(0.3, 1.0));
  }
  return in;
}

// Widths from a Gauss-Jordan inverse of V.
struct Oracle {
  const ArmScores& s;
  Matrix vinv;
  Oracle(const ArmScores& scores, const GramState& g) : s(scores), vinv(oracle::inverse(g.v)) {}
  double width(std::size_t i, std::size_t j) const {
    Vector d(s.features.cols());
    for (std::size_t r = 0; r < d.size(); ++r) d[r] = s.features(i, r) - s.features(j, r);
    return std::sqrt(std::max(0.0, oracle::quad_form(vinv, d)));
  }
  std::vector<std::pair<std::size_t, std::size_t>> all_pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < s.arms(); ++i)
      for (std::size_t j = i; j < s.arms(); ++j) out.emplace_back(i, j);
    return out;
  }
  std::vector<int> candidates(double nu) const {
    std::vector<int> c;
    for (std::size_t i = 0; i < s.arms(); ++i) {
      bool ok = true;
      for (std::size_t j = 0; j < s.arms(); ++j)
        if (j != i && s.utilities[i] + nu * width(i, j) < s.utilities[j]) ok = false;
      if (ok) c.push_back(static_cast<int>(i));
    }
    return c;
  }
};

}  // namespace

TEST(UcbAsym, Examples) {
  const auto s = line_setup();
  const auto g = init_gram(1, 1.0);
  EXPECT_EQ(select_ucb_asym(s, g, 2.0), (ArmPair{0, 2}));
  EXPECT_EQ(select_ucb_asym(s, g, 0.0), (ArmPair{0, 0}));
  ArmScores one;
  one.utilities = {0.3};
  one.features = Matrix(1, 1, 0.3);
  EXPECT_EQ(select_ucb_asym(one, g, 5.0), (ArmPair{0, 0}));
}

TEST(UcbOsym, Examples) {
  const auto s = line_setup();
  const auto g = init_gram(1, 1.0);
  EXPECT_EQ(select_ucb_osym(s, g, 2.0), (ArmPair{0, 2}));
  const double score = s.utilities[0] + s.utilities[2] + 2.0 * pair_width(s, g, 0, 2);
  EXPECT_NEAR(score, 2.6, 1e-12);
  EXPECT_EQ(select_ucb_osym(s, g, 0.0), (ArmPair{0, 0}));
}

TEST(CandidateSet, Examples) {
  const auto s = line_setup();
  const auto g = init_gram(1, 1.0);
  EXPECT_EQ(candidate_set(s, g, 0.1), (std::vector<int>{0}));
  EXPECT_EQ(candidate_set(s, g, 2.0), (std::vector<int>{0, 1, 2}));
}

TEST(UcbCsym, Examples) {
  const auto s = line_setup();
  const auto g = init_gram(1, 1.0);
  EXPECT_EQ(select_ucb_csym(s, g, 2.0), (ArmPair{0, 2}));
  EXPECT_NEAR(pair_width(s, g, 0, 2), 0.8, 1e-12);
  EXPECT_EQ(select_ucb_csym(s, g, 0.1), (ArmPair{0, 0}));
}

TEST(UcbStrategies, MatchExhaustiveEnumeration) {
  Rng rng(1);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t k = 2 + inst % 7;
    auto in = random_instance(rng, k, 1 + inst % 5);
    const double nu = rng.uniform(0.0, 2.0);
    const Oracle o(in.scores, in.gram);
    const auto& u = in.scores.utilities;

    std::size_t greedy = 0;
    for (std::size_t i = 0; i < k; ++i)
      if (u[i] > u[greedy]) greedy = i;
    std::size_t k2 = 0;
    for (std::size_t i = 0; i < k; ++i)
      if (u[i] + nu * o.width(i, greedy) > u[k2] + nu * o.width(k2, greedy)) k2 = i;
    EXPECT_EQ(select_ucb_asym(in.scores, in.gram, nu), (ArmPair{int(greedy), int(k2)})) << inst;

    std::pair<std::size_t, std::size_t> best{0, 0};
    double best_score = -INFINITY;
    for (auto [i, j] : o.all_pairs()) {
      const double sc = u[i] + u[j] + nu * o.width(i, j);
      if (sc > best_score) best_score = sc, best = {i, j};
    }
    EXPECT_EQ(select_ucb_osym(in.scores, in.gram, nu), (ArmPair{int(best.first), int(best.second)})) << inst;

    const auto cand = o.candidates(nu);
    EXPECT_EQ(candidate_set(in.scores, in.gram, nu), cand) << inst;
    EXPECT_TRUE(std::find(cand.begin(), cand.end(), int(greedy)) != cand.end());
    std::pair<int, int> cbest{cand.front(), cand.front()};
    double cw = -INFINITY;
    for (std::size_t a = 0; a < cand.size(); ++a)
      for (std::size_t b = a; b < cand.size(); ++b) {
        const double w = o.width(cand[a], cand[b]);
        if (w > cw) cw = w, cbest = {cand[a], cand[b]};
      }
    EXPECT_EQ(select_ucb_csym(in.scores, in.gram, nu), (ArmPair{cbest.first, cbest.second})) << inst;
  }
}

TEST(CandidateSet, AlwaysContainsArgmax) {
  Rng rng(2);
  for (int inst = 0; inst < 200; ++inst) {
    auto in = random_instance(rng, 6, 3);
    const auto c = candidate_set(in.scores, in.gram, rng.uniform(0.0, 0.5));
    const auto& u = in.scores.utilities;
    const int arg = static_cast<int>(std::max_element(u.begin(), u.end()) - u.begin());
    EXPECT_TRUE(std::find(c.begin(), c.end(), arg) != c.end());
  }
}

TEST(Select, ShapeChecks) {
  auto s = line_setup();
  EXPECT_THROW(select_ucb_asym(s, init_gram(2, 1.0), 1.0), ShapeError);
  ArmScores empty;
  EXPECT_THROW(select_ucb_asym(empty, init_gram(1, 1.0), 1.0), InvalidInput);
}

TEST(TsAsym, ZeroVarianceCollapsesToGreedy) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    auto in = random_instance(rng, 5, 3);
    const auto p = select_ts_asym(in.scores, in.gram, 0.0, rng, 0.0);
    EXPECT_EQ(p.first, p.second);
  }
}

TEST(TsStrategies, FixedSeedDeterminism) {
  Rng gen(5);
  auto in = random_instance(gen, 6, 3);
  for (Strategy s : {Strategy::TsAsym, Strategy::TsOsym, Strategy::TsCsym}) {
    const SelectionConfig cfg{s, 1.0, 1e-12};
    Rng a(99), b(99);
    for (int t = 1; t <= 20; ++t) EXPECT_EQ(select_arms(cfg, in.scores, in.gram, a, t), select_arms(cfg, in.scores, in.gram, b, t));
  }
}

TEST(TsAsym, MaxMeanArmFavoured) {
  Rng gen(6);
  auto in = random_instance(gen, 5, 3);
  const auto& u = in.scores.utilities;
  const int arg = static_cast<int>(std::max_element(u.begin(), u.end()) - u.begin());
  Rng rng(7);
  int hits = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) hits += select_ts_asym(in.scores, in.gram, 0.5, rng).second == arg;
  EXPECT_GT(static_cast<double>(hits) / n, 1.0 / 5.0);
}

TEST(TsOsym, ZeroVarianceIsGreedyPair) {
  Rng gen(8);
  auto in = random_instance(gen, 5, 2);
  const auto& u = in.scores.utilities;
  const int arg = static_cast<int>(std::max_element(u.begin(), u.end()) - u.begin());
  Rng rng(1);
  EXPECT_EQ(select_ts_osym(in.scores, in.gram, 0.0, rng, 0.0), (ArmPair{arg, arg}));
}

TEST(TsOsym, ReplayOracle) {
  Rng gen(9);
  for (int inst = 0; inst < 50; ++inst) {
    auto in = random_instance(gen, 2 + inst % 5, 3);
    const Oracle o(in.scores, in.gram);
    const double nu = 0.7, jitter = 1e-12;
    Rng a(inst), b(inst);
    const ArmPair got = select_ts_osym(in.scores, in.gram, nu, a, jitter);
    // same stream, same draw order (i <= j, row-major)
    ArmPair want;
    double best = -INFINITY;
    for (auto [i, j] : o.all_pairs()) {
      const double sd = nu * (i == j ? 0.0 : o.width(i, j)) + jitter;
      const double draw = b.normal(in.scores.utilities[i] + in.scores.utilities[j], sd);
      if (draw > best) best = draw, want = {int(i), int(j)};
    }
    EXPECT_EQ(got, want) << inst;
  }
}

TEST(TsCsym, SingletonCandidateSet) {
  const auto s = line_setup();
  Rng rng(1);
  EXPECT_EQ(select_ts_csym(s, init_gram(1, 1.0), 0.1, rng, 5), (ArmPair{0, 0}));
}

TEST(TsCsym, EqualWidthsGiveUniformPairs) {
  // equilateral triangle, equal utilities: three distinct pairs of equal width
  ArmScores s;
  s.utilities = {0.0, 0.0, 0.0};
  s.features = Matrix(3, 2);
  for (int k = 0; k < 3; ++k) {
    s.features(k, 0) = std::cos(2.0 * M_PI * k / 3.0);
    s.features(k, 1) = std::sin(2.0 * M_PI * k / 3.0);
  }
  const auto g = init_gram(2, 1.0);
  ASSERT_EQ(candidate_set(s, g, 1.0).size(), 3u);
  Rng rng(11);
  std::map<std::pair<int, int>, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto p = select_ts_csym(s, g, 1.0, rng, 10);
    ASSERT_NE(p.first, p.second);
    ++counts[{p.first, p.second}];
  }
  ASSERT_EQ(counts.size(), 3u);
  const double p = 1.0 / 3.0, sigma = std::sqrt(p * (1 - p) / n);
  for (const auto& [pair, c] : counts) EXPECT_NEAR(static_cast<double>(c) / n, p, 3 * sigma);
}

TEST(TsCsym, RoundOneHasNoSpreadTerm) {
  // log(K t^2) = 0 for K = 1, t = 1
  ArmScores s;
  s.utilities = {0.2};
  s.features = Matrix(1, 1, 1.0);
  Rng rng(1);
  EXPECT_EQ(select_ts_csym(s, init_gram(1, 1.0), 1.0, rng, 1), (ArmPair{0, 0}));
  EXPECT_THROW(select_ts_csym(s, init_gram(1, 1.0), 1.0, rng, 0), InvalidInput);
}

TEST(Strategy, NamesRoundTrip) {
  for (Strategy s : {Strategy::UcbAsym, Strategy::UcbOsym, Strategy::UcbCsym, Strategy::TsAsym, Strategy::TsOsym,
                     Strategy::TsCsym})
    EXPECT_EQ(parse_strategy(strategy_name(s)), s);
  EXPECT_THROW(parse_strategy("ucb"), ConfigError);
}
