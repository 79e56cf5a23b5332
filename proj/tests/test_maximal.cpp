#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace vws;

namespace {

ScalarField random_cells(const Grid& g, Rng& rng, double spread = 1.0) {
  std::lognormal_distribution<double> ln(0.0, spread);
  std::vector<double> v(g.cell_count());
  for (double& x : v) x = ln(rng);
  return ScalarField(g, Location::cell, std::move(v));
}

}  // namespace

TEST(Maximal, MatchesBruteForce) {
  Rng rng(51);
  for (int d : {1, 2}) {
    const Grid g(d, d == 1 ? 64 : 16);
    for (int t = 0; t < 4; ++t) {
      ScalarField s = random_cells(g, rng, 1.5);
      std::normal_distribution<double> sign(0.0, 1.0);
      for (double& v : s.values()) v *= sign(rng) < 0 ? -1.0 : 1.0;
      const auto brute = oracle::brute_maximal(g, s.values());
      const ScalarField m = maximal(s);
      for (std::size_t c = 0; c < brute.size(); ++c) ASSERT_NEAR(m[c], brute[c], 1e-12 * brute[c]);
    }
  }
}

TEST(Maximal, DominatesAndReproducesConstants) {
  Rng rng(52);
  const Grid g(2, 32);
  const ScalarField s = random_cells(g, rng);
  const ScalarField m = maximal(s);
  for (std::size_t c = 0; c < s.size(); ++c) EXPECT_GE(m[c], s[c]);
  for (double k : {0.1, 1.0 / 3.0, 7.25}) {
    const ScalarField mc = maximal(ScalarField(g, Location::cell, k));
    for (double v : mc.values()) ASSERT_EQ(v, k);
  }
}

TEST(Maximal, IsMonotoneAndPositivelyHomogeneous) {
  Rng rng(53);
  const Grid g(2, 16);
  const ScalarField a = random_cells(g, rng);
  ScalarField b = a, c2 = a;
  for (double& v : b.values()) v *= 1.5;
  for (double& v : c2.values()) v += 0.2;
  const ScalarField ma = maximal(a), mb = maximal(b), mc = maximal(c2);
  for (std::size_t c = 0; c < a.size(); ++c) {
    EXPECT_NEAR(mb[c], 1.5 * ma[c], 1e-12 * mb[c]);
    EXPECT_GE(mc[c], ma[c]);
  }
}

TEST(Maximal, NodeFieldsAreAveragedToCells) {
  const Grid g(1, 4);
  const ScalarField nodes(g, Location::node, std::vector<double>{0, 2, 4, 2, 0});
  const ScalarField m = maximal(nodes);
  EXPECT_DOUBLE_EQ(m[1], 3.0);
  EXPECT_DOUBLE_EQ(m[0], 7.0 / 3.0);  // cell averages 1, 3, 3, 1; best interval is cells 0..2
}

TEST(LevelSet, SelectsCellsAboveLambda) {
  Rng rng(54);
  const Grid g(2, 16);
  const ScalarField m = maximal(random_cells(g, rng));
  const double lam = quantile(m.values(), 0.5);
  const auto o = level_set(m, lam);
  for (std::size_t c = 0; c < m.size(); ++c) EXPECT_EQ(o->selected()[c], m[c] > lam);
  EXPECT_FALSE(o->is_whole_space());
  const double below = *std::min_element(m.values().begin(), m.values().end()) * 0.5;
  EXPECT_TRUE(level_set(m, below)->is_whole_space());
  EXPECT_THROW(level_set(m, 0.0), InvalidArgument);
}

TEST(RegularizedDensity, AddsDeltaAndRejectsNegatives) {
  const Grid g(1, 4);
  const ScalarField h(g, Location::cell, std::vector<double>{0, 1, 2, 3});
  const ScalarField r = regularized_density(h, 0.5);
  EXPECT_DOUBLE_EQ(r[0], 0.5);
  EXPECT_DOUBLE_EQ(r[3], 3.5);
  EXPECT_THROW(regularized_density(ScalarField(g, Location::cell, -1.0), 0.1), InvalidArgument);
  EXPECT_THROW(regularized_density(h, 0.0), InvalidArgument);
}

TEST(Muckenhoupt, MatchesBruteForceAndJensen) {
  Rng rng(55);
  for (int d : {1, 2}) {
    const Grid g(d, d == 1 ? 64 : 16);
    const ScalarField s = random_cells(g, rng);
    const Weight w(g, s.values(), "lognormal");
    for (double p : {1.5, 2.0, 3.0}) {
      const double est = muckenhoupt_constant(w, p).value;
      EXPECT_NEAR(est, oracle::brute_ap(g, w.values(), p), 1e-10 * est);
      EXPECT_GE(est, 1.0 - 1e-12);
      EXPECT_LE(muckenhoupt_constant(w, p, CubeFamily::dyadic).value, est * (1 + 1e-12));
    }
  }
}

TEST(Muckenhoupt, UnitWeightIsExactlyOne) {
  for (int d : {1, 2}) {
    const Weight w = Weight::unit(Grid(d, 32));
    for (double p : {1.0, 1.5, 2.0, 4.0}) {
      EXPECT_EQ(muckenhoupt_constant(w, p).value, 1.0);
      EXPECT_EQ(muckenhoupt_constant(w, p, CubeFamily::dyadic).value, 1.0);
    }
  }
}

TEST(Muckenhoupt, PowersOfMaximalFunctionAreA1) {
  // (Mg)^alpha is an A_1 weight for alpha < 1 with a constant that does not
  // depend on g.
  Rng rng(56);
  const Grid g(2, 32);
  for (double alpha : {0.25, 0.5, 0.75}) {
    std::vector<double> vals;
    for (int t = 0; t < 5; ++t) {
      ScalarField m = maximal(random_cells(g, rng, 2.0));
      for (double& v : m.values()) v = std::pow(v, alpha);
      vals.push_back(muckenhoupt_constant(Weight(g, m.values(), "Mg^a"), 1.0).value);
    }
    EXPECT_LE(spread(vals), 10.0);
    for (double v : vals) EXPECT_GE(v, 1.0);
  }
}

TEST(EstimateWeight, ExponentZeroGivesUnitWeight) {
  Rng rng(57);
  const Grid g(2, 16);
  const VectorField f = random_field(g, 1, rng);
  const Weight w = estimate_weight(f, 3.0, 3.0);
  for (double v : w.values()) EXPECT_EQ(v, 1.0);
  ASSERT_TRUE(w.muckenhoupt().has_value());
  EXPECT_EQ(w.muckenhoupt()->value, 1.0);
  const Weight w2 = estimate_weight(f, 3.0, 2.5, false);
  for (double v : w2.values()) EXPECT_LE(v, 1.0);
  EXPECT_FALSE(w2.muckenhoupt().has_value());
  EXPECT_THROW(estimate_weight(f, 2.0, 3.0), InvalidArgument);
}

TEST(EstimateWeight, ReportJsonCarriesArgmax) {
  Rng rng(58);
  const Grid g(2, 8);
  const Weight w(g, random_cells(g, rng).values(), "x");
  const auto j = ap_report_json(muckenhoupt_constant(w, 2.0));
  EXPECT_EQ(j["family"], "grid-aligned");
  EXPECT_EQ(j["argmax"]["lo"].size(), 2u);
}
