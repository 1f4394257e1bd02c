// Acceptance run: one PASS/FAIL line per criterion with its runtime and the
// measured quantities. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ast_gen.hpp"
#include "games.hpp"
#include "oracles.hpp"

using namespace largegame;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator<<(const T& v) {
    os_ << v;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

Outcome metric_closed_forms() {
  Outcome o;
  Detail d;
  double worst = 0.0;
  for (double dist : {0.2, 0.4, 1.0}) {
    auto s = FiniteMetricSpace::from_matrix({"x", "y"}, {{0, dist}, {dist, 0}});
    const Measure dx = Measure::point_mass(s, 0), dy = Measure::point_mass(s, 1);
    const double rho = prohorov(dx, dy), beta = bl_distance(dx, dy);
    const double rho_or = oracle::prohorov(dx, dy), beta_or = oracle::bl(dx, dy);
    for (double e : {rho - std::min(dist, 1.0), rho - rho_or, beta - 2 * dist / (2 + dist), beta - beta_or})
      worst = std::max(worst, std::abs(e));
    d << "d=" << dist << " rho=" << rho << " bl=" << beta << "; ";
  }
  o.pass = worst <= 1e-6;
  d << "max deviation " << worst;
  o.detail = d.str();
  return o;
}

Outcome metric_axioms() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 6);
  std::uniform_real_distribution<double> scale(0.1, 3.0);
  int failures = 0;
  for (int c = 0; c < 1000; ++c) {
    auto base = oracle::random_space(rng, static_cast<std::size_t>(size(rng)));
    Matrix m = base->matrix();
    const double f = scale(rng);
    for (auto& row : m)
      for (double& x : row) x *= f;
    auto s = FiniteMetricSpace::from_matrix(base->labels(), m);
    const Measure p = oracle::random_measure(rng, s), q = oracle::random_measure(rng, s),
                  r = oracle::random_measure(rng, s);
    for (auto dist : {std::function<double(const Measure&, const Measure&)>(
                          [](const Measure& a, const Measure& b) { return prohorov(a, b); }),
                      std::function<double(const Measure&, const Measure&)>(bl_distance)}) {
      const double pq = dist(p, q);
      bool ok = std::abs(pq - dist(q, p)) <= 1e-7;
      ok = ok && std::abs(dist(p, p)) <= 1e-7;
      ok = ok && (p == q || pq > 0.0);
      ok = ok && dist(p, r) <= pq + dist(q, r) + 1e-7;
      if (!ok) ++failures;
    }
  }
  return {failures == 0, "1000 triples, " + std::to_string(failures) + " violations"};
}

Outcome concentration() {
  const auto s = games::unit_space({"a", "b"});
  std::vector<double> logn, logm;
  Detail d;
  bool decreasing = true;
  double prev = 1e9;
  for (std::size_t n : {10, 100, 1000}) {
    const auto g = games::congestion_game(s, n);
    const auto rep = concentration_experiment(g, uniform_profile(g), 200, 0);
    const double m = rep.records[0].at("bl_q50");
    decreasing = decreasing && m < prev;
    prev = m;
    logn.push_back(std::log(static_cast<double>(n)));
    logm.push_back(std::log(m));
    d << "n=" << n << " median=" << m << "; ";
  }
  const double xbar = (logn[0] + logn[1] + logn[2]) / 3, ybar = (logm[0] + logm[1] + logm[2]) / 3;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    sxy += (logn[k] - xbar) * (logm[k] - ybar);
    sxx += (logn[k] - xbar) * (logn[k] - xbar);
  }
  const double slope = sxy / sxx;
  d << "slope " << slope;
  return {decreasing && slope >= -0.65 && slope <= -0.35, d.str()};
}

Outcome chebyshev() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Detail d;
  bool ok = true;
  double worst = -1.0;
  for (int c = 0; c < 10; ++c) {
    auto s = FiniteMetricSpace::from_coordinates({"p", "q", "r"}, {{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}});
    std::vector<double> h{u(rng), u(rng), u(rng)};
    const double norm = bl_norm(*s, h);
    for (double& x : h) x /= norm;
    const auto g = games::equal_weight_game(s, 100, "0");
    const auto r = chebyshev_check(g, games::random_profile(rng, g), h, 0.5, 2000, static_cast<std::uint64_t>(c));
    const double slack = r.empirical_tail - (0.04 + 3.0 * r.binomial_stderr);
    ok = ok && r.bound == 0.04 && slack <= 0.0;
    worst = std::max(worst, r.empirical_tail);
  }
  d << "10 functions, bound 0.04, largest empirical tail " << worst;
  return {ok, d.str()};
}

Outcome closed_graph() {
  const auto limit = games::two_type_limit();
  const GameSequenceSpec spec{limit, {10, 50, 100, 500}, Scheme::kQuota, 0};
  const auto rep = closed_graph_experiment(spec, SolverOptions{}, default_probes(limit.space()));
  Detail d;
  bool ok = true;
  double prev_gap = 1e9, prev_step = 1e9;
  for (const auto& r : rep.records) {
    ok = ok && !r.flagged && r.at("certified_gap") <= 1e-6;
    const double gap = r.at("limit_gap");
    ok = ok && gap < prev_gap;
    prev_gap = gap;
    d << "n=" << r.n << " gap=" << gap;
    if (auto step = r.get("tau_step_bl")) {
      ok = ok && *step < prev_step;
      prev_step = *step;
      d << " step=" << *step;
    }
    d << "; ";
  }
  ok = ok && prev_gap <= 1e-3;
  return {ok, d.str()};
}

Outcome meanfield_gap() {
  const std::size_t sizes[] = {2, 4, 6};
  std::vector<double> mean(3, 0.0);
  int per_seed = 0, failures = 0;
  double worst_exact = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto limit = games::coordination_congestion(seed);
    std::vector<double> c;
    for (std::size_t n : sizes) {
      const auto d = discretize(limit, n, Scheme::kQuota);
      const auto polished = polish_exact_rsne(d.game, solve_rsne(d.game).profile);
      if (!polished || polished->second > 1e-8) {
        ++failures;
        c.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      worst_exact = std::max(worst_exact, polished->second);
      c.push_back(rsne_gap_meanfield(d.game, polished->first));
    }
    if (c[0] > c[1] && c[1] > c[2]) ++per_seed;
    for (std::size_t k = 0; k < 3; ++k) mean[k] += c[k] / 10.0;
  }
  Detail d;
  d << "mean c(n) " << mean[0] << ", " << mean[1] << ", " << mean[2] << "; decreasing in " << per_seed
    << "/10 seeds; max exact gap " << worst_exact;
  return {failures == 0 && mean[0] > mean[1] && mean[1] > mean[2] && per_seed == 10, d.str()};
}

Outcome definitions() {
  std::mt19937_64 rng(7);
  int solved = 0, ned_fail = 0, pure = 0, disagree = 0;
  for (int c = 0; c < 50; ++c) {
    auto s = games::random_small_space(rng);
    const auto g = games::random_limit_game(rng, s, std::uniform_int_distribution<std::size_t>(1, 3)(rng));
    const auto r = solve_limit_rsne(g);
    if (r.certified_gap <= 1e-6) {
      ++solved;
      if (!ned_check(induced_distribution(g, r.strategy), g, 2e-6).is_ned) ++ned_fail;
    }
    for (int k = 0; k < 10; ++k) {
      std::vector<std::size_t> f;
      for (const auto& type : g.types()) {
        const auto& m = type.feasible.members();
        f.push_back(m[std::uniform_int_distribution<std::size_t>(0, m.size() - 1)(rng)]);
      }
      ++pure;
      if (pure_ne_check(g, f, 0.0) != rsne_check(g, pure_strategy(g, f), 0.0).is_equilibrium) ++disagree;
    }
  }
  Detail d;
  d << solved << "/50 solved, " << ned_fail << " ned failures; " << disagree << "/" << pure
    << " pure-profile disagreements";
  return {ned_fail == 0 && disagree == 0 && solved > 0, d.str()};
}

Outcome evaluators() {
  std::mt19937_64 rng(8);
  int comparisons = 0, mc_fail = 0;
  double worst_linear = 0.0;
  for (int c = 0; c < 50; ++c) {
    auto s = games::random_small_space(rng, 3);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    const auto g = games::random_finite_game(rng, s, n, games::PayoffShape::kGeneral);
    const auto prof = games::random_profile(rng, g);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::optional<std::size_t>> devs{std::nullopt};
      for (std::size_t a : g.player(i).feasible.members()) devs.push_back(a);
      for (const auto& dev : devs) {
        const double exact = exact_expected_payoff(g, i, prof, dev);
        const auto mc = mc_expected_payoff(g, i, prof, dev, 4000, static_cast<std::uint64_t>(c));
        ++comparisons;
        if (std::abs(mc.estimate - exact) > 4.0 * mc.stderr_ + 1e-12) ++mc_fail;
      }
    }
    const auto lin = games::random_finite_game(rng, s, n, games::PayoffShape::kLinear);
    const auto lp = games::random_profile(rng, lin);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a : lin.player(i).feasible.members())
        worst_linear = std::max(worst_linear, std::abs(exact_expected_payoff(lin, i, lp, a) -
                                                       mean_field_payoff(lin, i, a, deviation_summary(lin, i, a, lp))));
    const auto sep = games::random_finite_game(rng, s, n, games::PayoffShape::kSeparable);
    const auto sp = games::random_profile(rng, sep);
    const Measure tau = summary(sep, sp);
    for (std::size_t i = 0; i < n; ++i)
      worst_linear = std::max(worst_linear,
                              std::abs(exact_expected_payoff(sep, i, sp) - mean_field_payoff(sep, i, sp[i], tau)));
  }
  Detail d;
  d << mc_fail << "/" << comparisons << " Monte Carlo estimates outside 4 stderr; linear max deviation "
    << worst_linear;
  return {mc_fail == 0 && worst_linear <= 1e-10, d.str()};
}

Outcome parser() {
  gen::AstGenerator g(99, {{"a", "b", "left lane", "x_1"}, 2, true, 6});
  int mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    const ExprPtr e = g.next();
    if (!structurally_equal(e, parse(format(e)))) ++mismatches;
  }
  struct Case {
    const char* text;
    int line, column;
  };
  const Case cases[] = {{"1 +", 1, 4},         {"foo(1)", 1, 1},     {"avg(avg(avg(1)))", 1, 9},
                        {"mu a", 1, 4},        {"coord(x)", 1, 7},   {"(1 + 2", 1, 7},
                        {"1 2", 1, 3},         {"mu(\"a)", 1, 4},    {"1 + $", 1, 5},
                        {"1e999", 1, 1},       {"1 +\n  * 2", 2, 3}, {"min(1)", 1, 6},
                        {"mu(+)", 1, 4}};
  int unlocated = 0;
  for (const auto& c : cases) {
    try {
      parse(c.text);
      ++unlocated;
    } catch (const ParseError& e) {
      if (e.line() != c.line || e.column() != c.column) ++unlocated;
    }
  }
  Detail d;
  d << "500 ASTs, " << mismatches << " round-trip mismatches; " << unlocated << "/" << std::size(cases)
    << " error cases mislocated";
  return {mismatches == 0 && unlocated == 0, d.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"1 metric closed forms", 1, metric_closed_forms},
      {"2 metric axioms", 30, metric_axioms},
      {"3 concentration", 120, concentration},
      {"4 chebyshev bound", 60, chebyshev},
      {"5 closed graph", 180, closed_graph},
      {"6 mean-field gap of exact equilibria", 120, meanfield_gap},
      {"7 definition consistency", 60, definitions},
      {"8 evaluator oracle", 60, evaluators},
      {"9 parser", 10, parser},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.budget_s;
    if (!pass) ++failed;
    std::printf("%s criterion %s (%.2fs, budget %.0fs): %s\n", pass ? "PASS" : "FAIL", c.name, secs, c.budget_s,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
