#include <gtest/gtest.h>

#include <random>

#include "games.hpp"

using namespace largegame;

namespace {

SpacePtr ab() { return games::unit_space({"a", "b"}); }

}  // namespace

TEST(LimitGame, RejectsBadMasses) {
  auto s = ab();
  const Payoff v = Payoff::parse_and_bind("isact(a)", s);
  EXPECT_THROW(LimitGame(s, {{0.9, ActionSubset::all(s), v}}), DomainError);
  EXPECT_THROW(LimitGame(s, {{1.2, ActionSubset::all(s), v}, {-0.2, ActionSubset::all(s), v}}), DomainError);
  EXPECT_THROW(LimitGame(s, {}), DomainError);
}

TEST(SocietalSummary, Examples) {
  auto s = ab();
  const auto dom = games::dominant_limit(s);
  EXPECT_EQ(societal_summary(dom, pure_strategy(dom, {0})), Measure::point_mass(s, 0));
  const Payoff v = Payoff::parse_and_bind("isact(a)", s);
  const LimitGame two(s, {{0.5, ActionSubset::all(s), v}, {0.5, ActionSubset::all(s), v}});
  const Measure half = societal_summary(two, pure_strategy(two, {0, 1}));
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  EXPECT_DOUBLE_EQ(half[1], 0.5);
  EXPECT_EQ(societal_summary(two, uniform_strategy(two)), Measure::uniform(s));
}

TEST(SocietalSummary, MassOneAndLinear) {
  std::mt19937_64 rng(1);
  for (int c = 0; c < 100; ++c) {
    auto s = games::random_small_space(rng);
    const auto g = games::random_limit_game(rng, s, std::uniform_int_distribution<std::size_t>(1, 3)(rng));
    TypeStrategy x, y, z;
    const double t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (const auto& type : g.types()) {
      x.push_back(games::random_strategy(rng, type.feasible));
      y.push_back(games::random_strategy(rng, type.feasible));
      z.push_back(mix({{t, x.back()}, {1.0 - t, y.back()}}));
    }
    const Measure sz = societal_summary(g, z);
    double mass = 0.0;
    for (double w : sz.weights()) mass += w;
    EXPECT_NEAR(mass, 1.0, 1e-12);
    const Measure combo = mix({{t, societal_summary(g, x)}, {1.0 - t, societal_summary(g, y)}});
    for (std::size_t a = 0; a < s->size(); ++a) EXPECT_NEAR(sz[a], combo[a], 1e-12);
  }
}

TEST(PsiGap, Examples) {
  auto s = ab();
  const Payoff v = Payoff::parse_and_bind("isact(a) + 0.5*isact(b)", s);
  const Measure tau = Measure::uniform(s);
  const auto all = ActionSubset::all(s);
  EXPECT_EQ(psi_gap(all, v, Measure::point_mass(s, 0), tau), 0.0);
  EXPECT_DOUBLE_EQ(psi_gap(all, v, Measure::point_mass(s, 1), tau), -0.5);
  const Payoff cong = Payoff::parse_and_bind(games::congestion_text(s), s);
  EXPECT_EQ(psi_gap(all, cong, tau, tau), 0.0);
  EXPECT_THROW(psi_gap(ActionSubset(s, {0}), v, Measure::point_mass(s, 1), tau), DomainError);
}

TEST(RsneCheck, Examples) {
  auto s = ab();
  const auto dom = games::dominant_limit(s);
  const auto ok = rsne_check(dom, pure_strategy(dom, {0}), 0.0);
  EXPECT_TRUE(ok.is_equilibrium);
  EXPECT_EQ(ok.worst_gap, 0.0);
  const auto bad = rsne_check(dom, pure_strategy(dom, {1}), 1e-6);
  EXPECT_FALSE(bad.is_equilibrium);
  EXPECT_EQ(bad.witness_type, 0u);
  EXPECT_EQ(bad.witness_action, 0u);
  EXPECT_EQ(bad.worst_gap, 1.0);
  const auto cong = games::congestion_limit(games::unit_space({"a", "b", "c"}));
  EXPECT_TRUE(rsne_check(cong, uniform_strategy(cong), 0.0).is_equilibrium);
}

TEST(RsneCheck, AgreesWithMinimumPsi) {
  std::mt19937_64 rng(2);
  for (int c = 0; c < 200; ++c) {
    auto s = games::random_small_space(rng);
    const auto g = games::random_limit_game(rng, s, std::uniform_int_distribution<std::size_t>(1, 3)(rng));
    TypeStrategy st;
    for (const auto& type : g.types()) st.push_back(games::random_strategy(rng, type.feasible));
    const Measure tau = societal_summary(g, st);
    // independent recomputation: expected payoff minus best pure payoff
    double worst = 0.0;
    for (std::size_t t = 0; t < g.size(); ++t) {
      const auto& type = g.type(t);
      double expected = 0.0, best = -1e300;
      for (std::size_t a = 0; a < s->size(); ++a) expected += st[t][a] * type.payoff.eval(a, tau);
      for (std::size_t a : type.feasible.members()) best = std::max(best, type.payoff.eval(a, tau));
      worst = std::min(worst, expected - best);
    }
    const double tol = std::uniform_real_distribution<double>(0.0, 0.2)(rng);
    const auto r = rsne_check(g, st, tol);
    EXPECT_NEAR(r.worst_gap, -worst, 1e-12);
    if (std::abs(-worst - tol) > 1e-12) EXPECT_EQ(r.is_equilibrium, -worst <= tol);
  }
}

TEST(SolveLimitRsne, Examples) {
  auto s = ab();
  const auto dom = games::dominant_limit(s);
  const auto r = solve_limit_rsne(dom);
  EXPECT_EQ(r.certified_gap, 0.0);
  EXPECT_EQ(r.strategy[0], Measure::point_mass(s, 0));

  const auto cong = games::congestion_limit(games::unit_space({"a", "b", "c"}));
  const auto c = solve_limit_rsne(cong);
  EXPECT_LE(c.certified_gap, 1e-6);
  for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(c.strategy[0][a], 1.0 / 3.0, 1e-6);

  const auto two = games::two_type_limit();
  const auto x = solve_limit_rsne(two), y = solve_limit_rsne(two);
  EXPECT_TRUE(x.converged);
  EXPECT_EQ(x.certified_gap, y.certified_gap);
  for (std::size_t t = 0; t < two.size(); ++t) EXPECT_EQ(x.strategy[t], y.strategy[t]);
  EXPECT_NEAR(rsne_check(two, x.strategy, 0.0).worst_gap, x.certified_gap, 1e-15);
}

TEST(InducedDistribution, Examples) {
  auto s = ab();
  const auto dom = games::dominant_limit(s);
  const auto d = induced_distribution(dom, pure_strategy(dom, {0}));
  ASSERT_EQ(d.characteristics.size(), 1u);
  EXPECT_EQ(d.weight[0][0], 1.0);
  EXPECT_EQ(d.weight[0][1], 0.0);

  const Payoff v = Payoff::parse_and_bind("isact(a)", s), w = Payoff::parse_and_bind("isact(b)", s);
  const LimitGame two(s, {{0.25, ActionSubset::all(s), v}, {0.75, ActionSubset(s, {1}), w}});
  const auto u = induced_distribution(two, uniform_strategy(two));
  ASSERT_EQ(u.characteristics.size(), 2u);
  EXPECT_DOUBLE_EQ(u.weight[0][0], 0.125);
  EXPECT_DOUBLE_EQ(u.weight[0][1], 0.125);
  EXPECT_DOUBLE_EQ(u.weight[1][0], 0.0);
  EXPECT_DOUBLE_EQ(u.weight[1][1], 0.75);
}

TEST(InducedDistribution, MarginalsAreConsistent) {
  std::mt19937_64 rng(3);
  for (int c = 0; c < 50; ++c) {
    auto s = games::random_small_space(rng);
    const auto g = games::random_limit_game(rng, s, std::uniform_int_distribution<std::size_t>(1, 3)(rng));
    TypeStrategy st;
    for (const auto& type : g.types()) st.push_back(games::random_strategy(rng, type.feasible));
    const auto d = induced_distribution(g, st);
    const Measure tau = societal_summary(g, st);
    const Measure am = d.action_marginal();
    for (std::size_t a = 0; a < s->size(); ++a) EXPECT_NEAR(am[a], tau[a], 1e-12);
    const auto cm = d.characteristic_marginal();
    const auto expected = g.characteristic_distribution();
    ASSERT_EQ(cm.size(), expected.size());
    for (std::size_t k = 0; k < cm.size(); ++k) EXPECT_NEAR(cm[k], expected[k].second, 1e-12);
  }
}

TEST(NedCheck, Examples) {
  auto s = ab();
  const auto dom = games::dominant_limit(s);
  EXPECT_TRUE(ned_check(induced_distribution(dom, pure_strategy(dom, {0})), dom, 0.0).is_ned);
  const auto bad = ned_check(induced_distribution(dom, pure_strategy(dom, {1})), dom, 1e-6);
  EXPECT_FALSE(bad.is_ned);
  ASSERT_EQ(bad.atoms.size(), 1u);
  EXPECT_EQ(bad.atoms[0].gap, 1.0);

  const auto cong = games::congestion_limit(games::unit_space({"a", "b", "c"}));
  EXPECT_TRUE(ned_check(induced_distribution(cong, uniform_strategy(cong)), cong, 0.0).is_ned);
}

TEST(NedCheck, MarginalMismatchNamesTheCharacteristic) {
  auto s = ab();
  const Payoff v = Payoff::parse_and_bind("isact(a)", s), w = Payoff::parse_and_bind("isact(b)", s);
  const LimitGame two(s, {{0.5, ActionSubset::all(s), v}, {0.5, ActionSubset::all(s), w}});
  auto d = induced_distribution(two, uniform_strategy(two));
  d.weight[0][0] += 0.1;
  d.weight[1][0] -= 0.1;
  try {
    ned_check(d, two, 1e-6);
    FAIL() << "expected a precondition error";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("isact(a)"), std::string::npos) << e.what();
  }
  const LimitGame other(s, {{1.0, ActionSubset::all(s), w}});
  EXPECT_THROW(ned_check(induced_distribution(two, uniform_strategy(two)), other, 1e-6), PreconditionError);
}

TEST(NedCheck, SolvedEquilibriaAreDistributions) {
  std::mt19937_64 rng(4);
  int checked = 0;
  for (int c = 0; c < 50; ++c) {
    auto s = games::random_small_space(rng);
    const auto g = games::random_limit_game(rng, s, std::uniform_int_distribution<std::size_t>(1, 3)(rng));
    const auto r = solve_limit_rsne(g);
    if (r.certified_gap > 1e-6) continue;
    ++checked;
    EXPECT_TRUE(ned_check(induced_distribution(g, r.strategy), g, 2e-6).is_ned) << "game " << c;
  }
  EXPECT_GE(checked, 40);
}

TEST(PureNe, AgreesWithRsneCheckOnDegenerateProfiles) {
  std::mt19937_64 rng(5);
  for (int c = 0; c < 300; ++c) {
    auto s = games::random_small_space(rng);
    const auto g = games::random_limit_game(rng, s, std::uniform_int_distribution<std::size_t>(1, 3)(rng));
    std::vector<std::size_t> f;
    for (const auto& type : g.types()) {
      const auto& m = type.feasible.members();
      f.push_back(m[std::uniform_int_distribution<std::size_t>(0, m.size() - 1)(rng)]);
    }
    EXPECT_EQ(pure_ne_check(g, f, 0.0), rsne_check(g, pure_strategy(g, f), 0.0).is_equilibrium) << "game " << c;
  }
}
